"""Dense complex matrix helpers, state validation, distances and entropy kernels.

Matrices are plain :class:`numpy.ndarray` objects. A density matrix is any
square complex array that passes :func:`density_matrix`; the function returns
a hermitized copy so downstream code never sees residual asymmetry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence, ValidationError


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances used when validating states and families.

    All values are absolute. ``branch_floor`` is the threshold below which
    ``tr(V rho V^*)`` or a branch probability counts as exactly zero.
    """

    herm: float = 1e-10
    psd: float = 1e-10
    unit: float = 1e-10
    normalization: float = 1e-10
    branch_floor: float = 1e-12


DEFAULT_TOL = Tolerances()


def as_square(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValidationError(f"expected a nonempty square matrix, got shape {a.shape}")
    return a


def hermitize(m) -> np.ndarray:
    """Return ``(m + m^*)/2``."""
    a = as_square(m)
    return 0.5 * (a + a.conj().T)


def density_matrix(m, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Validate ``m`` as a density matrix and return its hermitized copy.

    Raises
    ------
    ValidationError
        If ``m`` is not Hermitian, not positive semidefinite or not of unit
        trace within the tolerances of ``tol``.
    """
    a = as_square(m)
    if not np.all(np.isfinite(a)):
        raise ValidationError("density matrix has non-finite entries")
    asym = np.max(np.abs(a - a.conj().T))
    if asym > tol.herm:
        raise ValidationError(f"matrix is not Hermitian (asymmetry {asym:.3e})")
    h = 0.5 * (a + a.conj().T)
    tr = np.trace(h).real
    if abs(tr - 1.0) > tol.unit:
        raise ValidationError(f"trace {tr!r} differs from 1")
    lo = np.linalg.eigvalsh(h)[0]
    if lo < -tol.psd:
        raise ValidationError(f"matrix is not positive semidefinite (min eigenvalue {lo:.3e})")
    return h


def is_density(m, tol: Tolerances = DEFAULT_TOL) -> bool:
    try:
        density_matrix(m, tol)
    except ValidationError:
        return False
    return True


def maximally_mixed(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex) / n


def pure_state(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def project_to_density(m) -> np.ndarray:
    """Nearest-in-spectrum density matrix: hermitize, clamp eigenvalues, renormalize."""
    h = hermitize(m)
    w, u = np.linalg.eigh(h)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise ValidationError("matrix has no positive part")
    w = w / w.sum()
    return hermitize((u * w) @ u.conj().T)


def eta(x: float) -> float:
    """Shannon-Boltzmann kernel ``-x ln x`` with ``eta(0) = 0``."""
    if x < 0:
        raise ValueError(f"eta is defined on x >= 0, got {x}")
    if x == 0:
        return 0.0
    return float(-x * np.log(x))


def eta_array(x) -> np.ndarray:
    """Vectorized :func:`eta`; entries must be nonnegative."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("eta is defined on x >= 0")
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = -x[pos] * np.log(x[pos])
    return out


def shannon(p) -> float:
    """Shannon entropy in nats of a nonnegative vector (no renormalization)."""
    return float(eta_array(p).sum())


def clamped_eigvalsh(rho, psd_tol: float = DEFAULT_TOL.psd) -> np.ndarray:
    w = np.linalg.eigvalsh(hermitize(rho))
    if w[0] < -psd_tol:
        raise ValidationError(f"negative eigenvalue {w[0]:.3e}")
    return np.clip(w, 0.0, None)


def von_neumann_entropy(rho, tol: Tolerances = DEFAULT_TOL) -> float:
    """``S(rho) = -tr(rho ln rho)`` in nats.

    Eigenvalues slightly below zero (within ``tol.psd``) are clamped to zero.
    """
    r = density_matrix(rho, tol)
    return shannon(clamped_eigvalsh(r, tol.psd))


def psd_sqrt(m) -> np.ndarray:
    w, u = np.linalg.eigh(hermitize(m))
    w = np.sqrt(np.clip(w, 0.0, None))
    return (u * w) @ u.conj().T


def fidelity(rho1, rho2) -> float:
    """Root fidelity ``tr sqrt(sqrt(rho1) rho2 sqrt(rho1))``."""
    s = psd_sqrt(rho1)
    inner = s @ hermitize(rho2) @ s
    return float(np.sqrt(np.clip(np.linalg.eigvalsh(hermitize(inner)), 0.0, None)).sum())


def hs_distance(rho1, rho2) -> float:
    d = np.asarray(rho1) - np.asarray(rho2)
    return float(np.sqrt(max(np.vdot(d, d).real, 0.0)))


def distance(rho1, rho2, kind: str = "hs") -> float:
    """Distance between two density matrices.

    ``kind`` is one of ``"hs"`` (Hilbert-Schmidt), ``"trace"`` (sum of
    absolute eigenvalues of the difference) or ``"bures"``.
    """
    a = as_square(rho1)
    b = as_square(rho2)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch {a.shape} vs {b.shape}")
    kind = kind.lower()
    if kind in ("hs", "hilbert-schmidt", "hilbertschmidt", "d1"):
        return hs_distance(a, b)
    if kind in ("trace", "d2"):
        return float(np.abs(np.linalg.eigvalsh(hermitize(a - b))).sum())
    if kind in ("bures", "d3"):
        f = fidelity(a, b)
        return float(np.sqrt(max(2.0 * (1.0 - f), 0.0)))
    raise ValueError(f"unknown distance kind {kind!r}")


def dominant_eigenpair(m, tol: float = 1e-13, max_iter: int = 20000):
    """Dominant eigenvalue and eigenvector of a square matrix.

    Power iteration from the all-ones vector; if it has not settled after
    ``max_iter`` steps the dense solver is used instead. The returned vector
    has unit 1-norm, and is entrywise nonnegative when ``m`` is.

    Raises
    ------
    NonConvergence
        If neither route produces a real eigenvalue with a small residual.
    """
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError("dominant_eigenpair needs a square matrix")
    n = a.shape[0]
    nonneg = np.isrealobj(a) or np.allclose(np.imag(a), 0)
    nonneg = nonneg and bool(np.all(np.real(a) >= 0))
    work = np.real(a).astype(float) if nonneg else a.astype(complex)

    v = np.ones(n, dtype=work.dtype) / n
    lam = 0.0
    for _ in range(max_iter):
        w = work @ v
        norm = np.abs(w).sum()
        if norm == 0:
            break
        lam = np.vdot(v, w) / np.vdot(v, v)
        w = w / norm
        if np.abs(w - v).sum() <= tol:
            v = w
            break
        v = w
    res = np.linalg.norm(work @ v - lam * v)
    if not res <= 10 * tol * max(1.0, abs(lam)) * max(1.0, np.linalg.norm(work)):
        vals, vecs = np.linalg.eig(work)
        idx = int(np.argmax(np.abs(vals)))
        lam = vals[idx]
        v = vecs[:, idx]
        res = np.linalg.norm(work @ v - lam * v) / np.linalg.norm(v)
    if abs(np.imag(lam)) > 1e-9 * max(1.0, abs(lam)):
        raise NonConvergence("dominant eigenvalue is not real", residual=float(res))
    v = _normalize_vector(v, nonneg)
    res = float(np.linalg.norm(work @ v - np.real(lam) * v) / max(np.linalg.norm(v), 1e-300))
    if res > 1e-8 * max(1.0, abs(lam)):
        raise NonConvergence("dominant eigenpair did not converge", residual=res)
    return float(np.real(lam)), v


def _normalize_vector(v, nonneg: bool) -> np.ndarray:
    v = np.asarray(v)
    k = int(np.argmax(np.abs(v)))
    v = v * (abs(v[k]) / v[k])
    v = v / np.abs(v).sum()
    if nonneg:
        v = np.real(v)
        v = np.where(np.abs(v) < 1e-300, 0.0, v)
    return v
