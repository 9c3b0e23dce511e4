"""Fixed points of the nonlinear channel and eigenpairs of the Ruelle operator.

``solve_lambda_fixed_point`` iterates ``Lambda`` until the Hilbert-Schmidt
step size drops below ``tol``. ``solve_ruelle_eigen`` runs the normalized
power iteration ``rho <- L_H(rho) / tr L_H(rho)`` and, when that stalls,
falls back to the regularized maps ``rho <- L_H(rho + I/n) / tr(...)`` for a
doubling ladder of ``n``. Two independent oracles are provided for tests:
the vectorized superoperator of a linear channel and the closed-form 2x2
diagonal eigenproblem.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NonConvergence, ValidationError, ZeroImage
from .matcore import density_matrix, hermitize, hs_distance, maximally_mixed, project_to_density
from .qifs import KrausFamily, QifsModel, conj_apply, lambda_apply

log = logging.getLogger(__name__)

TRACE_FLOOR = 1e-300


@dataclass
class SolveConfig:
    tol: float = 1e-12
    max_iter: int = 100_000
    regularization_n0: int = 0
    seed_state: np.ndarray | None = None
    ladder_steps: int = 24

    def __post_init__(self):
        if not self.tol > 0:
            raise ValidationError("tol must be positive")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be at least 1")
        if self.regularization_n0 < 0:
            raise ValidationError("regularization_n0 must be nonnegative")

    def seed(self, dim: int) -> np.ndarray:
        if self.seed_state is None:
            return maximally_mixed(dim)
        s = density_matrix(self.seed_state)
        if s.shape[0] != dim:
            raise ValidationError(f"seed state has dimension {s.shape[0]}, model has {dim}")
        return s


@dataclass
class EigenResult:
    beta: float
    rho_beta: np.ndarray
    residual: float
    iterations: int
    mode: str = "direct"


@dataclass
class ClosedForm2x2:
    """Eigenpairs of the diagonal problem ``[[a, b], [c, d]] v = lambda v``.

    ``rho_plus`` is the trace-normalized Perron eigenstate. ``rho_minus`` is
    normalized the same way but is indefinite for positive inputs; when its
    trace vanishes it is scaled to unit 1-norm instead.
    ``condition_gap`` is ``b/(1-a) - (1-d)/c``, which vanishes exactly when
    1 is an eigenvalue (the normalized-weights solvability condition).
    """

    lambda_plus: float
    lambda_minus: float
    zeta: float
    rho_plus: np.ndarray
    rho_minus: np.ndarray
    degenerate: bool = False
    condition_gap: float = field(default=float("nan"))


def solve_lambda_fixed_point(m: QifsModel, cfg: SolveConfig | None = None):
    """Iterate ``Lambda`` from the seed state until ``D_1(Lambda(rho), rho) <= tol``.

    Returns ``(rho, iterations, residual)``. Convergence is empirical; a
    model without an attractive invariant measure raises
    :class:`NonConvergence`.
    """
    cfg = cfg or SolveConfig()
    rho = cfg.seed(m.dim)
    res = np.inf
    for it in range(1, cfg.max_iter + 1):
        nxt = lambda_apply(m, rho)
        res = hs_distance(nxt, rho)
        rho = nxt
        if res <= cfg.tol:
            return rho, it, res
    raise NonConvergence("Lambda iteration did not reach tolerance", residual=res, iterations=cfg.max_iter)


def ruelle_apply(H: KrausFamily, V: KrausFamily, rho) -> np.ndarray:
    """``L_H(rho) = sum_i tr(H_i rho H_i^*) V_i rho V_i^*`` (not normalized)."""
    if H.k != V.k or H.dim != V.dim:
        raise ValidationError("H and V must have the same arity and dimension")
    rho = np.asarray(rho, dtype=complex)
    weights = np.einsum("kii->k", conj_apply(H.ops, rho)).real
    imgs = conj_apply(V.ops, rho)
    return hermitize(np.tensordot(weights, imgs, axes=1))


def _normalized_iteration(H, V, rho, shift, tol, max_iter):
    """Iterate ``rho <- L(rho + shift I)/tr(...)``; returns (rho, iterations, residual, ok)."""
    eye = np.eye(V.dim)
    res = np.inf
    for it in range(1, max_iter + 1):
        img = ruelle_apply(H, V, rho + shift * eye if shift else rho)
        t = np.trace(img).real
        if not t > TRACE_FLOOR:
            return rho, it, res, False
        nxt = img / t
        res = hs_distance(nxt, rho)
        rho = nxt
        if res <= tol:
            return rho, it, res, True
    return rho, max_iter, res, False


def _eigen_residual(H, V, rho):
    img = ruelle_apply(H, V, rho)
    beta = float(np.trace(img).real)
    if not beta > TRACE_FLOOR:
        return beta, np.inf
    return beta, hs_distance(img / beta, rho)


def solve_ruelle_eigen(H: KrausFamily, V: KrausFamily, cfg: SolveConfig | None = None) -> EigenResult:
    """Eigenpair ``L_H(rho) = beta rho`` with ``rho`` a density matrix.

    Direct mode iterates the normalized operator from ``cfg.seed_state``.
    If it stalls or meets a zero-trace image, the regularized maps with
    shift ``I/n`` are iterated for ``n = n0, 2 n0, 4 n0, ...`` (``n0 = 1``
    when ``cfg.regularization_n0`` is 0), each warm-started from the
    previous one, and every rung is polished by direct iteration. The
    result is whichever eigenpair the seed leads to; uniqueness is not
    claimed.
    """
    cfg = cfg or SolveConfig()
    if H.k != V.k or H.dim != V.dim:
        raise ValidationError("H and V must have the same arity and dimension")
    seed = cfg.seed(V.dim)
    seed_trace = np.trace(ruelle_apply(H, V, seed)).real
    if not seed_trace > TRACE_FLOOR:
        full = np.trace(ruelle_apply(H, V, maximally_mixed(V.dim))).real
        if not full > TRACE_FLOOR:
            raise ZeroImage("L_H vanishes on the seed and on I/N; the potential is degenerate")

    total = 0
    if cfg.regularization_n0 == 0 and seed_trace > TRACE_FLOOR:
        rho, it, res, ok = _normalized_iteration(H, V, seed, 0.0, cfg.tol, cfg.max_iter)
        total += it
        if ok:
            return _finish(H, V, rho, total, "direct", cfg.tol)
        log.info("direct iteration stalled (residual %.3e); switching to regularized ladder", res)

    n = cfg.regularization_n0 or 1
    rho = seed
    last = None
    best = (np.inf, None)
    for _ in range(cfg.ladder_steps):
        rho_n, it, _, _ = _normalized_iteration(H, V, rho, 1.0 / n, cfg.tol, cfg.max_iter)
        total += it
        polished, it2, res2, ok = _normalized_iteration(H, V, rho_n, 0.0, cfg.tol, cfg.max_iter)
        total += it2
        if ok:
            return _finish(H, V, polished, total, f"regularized(n={n})", cfg.tol)
        if last is not None:
            # first-order extrapolation in 1/n: rho ~ rho_n + c/n
            guess = project_to_density(2.0 * rho_n - last)
            _, gres = _eigen_residual(H, V, guess)
            if gres <= cfg.tol:
                return _finish(H, V, guess, total, f"extrapolated(n={n})", cfg.tol)
            if gres < best[0]:
                best = (gres, guess)
        last = rho_n
        rho = rho_n
        n *= 2
    raise NonConvergence("Ruelle eigen-iteration did not converge", residual=best[0], iterations=total)


def solve_ruelle_eigen_from_seeds(
    H: KrausFamily, V: KrausFamily, seeds, cfg: SolveConfig | None = None, same_tol: float = 1e-8
) -> list[EigenResult]:
    """Run :func:`solve_ruelle_eigen` from each seed state and keep the distinct limits.

    Two results are the same when their states are within ``same_tol`` in
    Hilbert-Schmidt distance. No limit is preferred over another.
    """
    cfg = cfg or SolveConfig()
    found: list[EigenResult] = []
    for seed in seeds:
        r = solve_ruelle_eigen(H, V, replace(cfg, seed_state=seed))
        if all(hs_distance(r.rho_beta, f.rho_beta) > same_tol for f in found):
            found.append(r)
    return found


def _finish(H, V, rho, iterations, mode, tol) -> EigenResult:
    rho = hermitize(rho)
    rho = rho / np.trace(rho).real
    beta, res = _eigen_residual(H, V, rho)
    if not beta > 0:
        raise ZeroImage("eigenvalue is zero at the limit state")
    if res > 10 * tol:
        raise NonConvergence("post-hoc eigen residual too large", residual=res, iterations=iterations)
    return EigenResult(beta=beta, rho_beta=rho, residual=res, iterations=iterations, mode=mode)


def closed_form_2x2_diagonal(a: float, b: float, c: float, d: float) -> ClosedForm2x2:
    """Closed-form eigenpairs of ``[[a, b], [c, d]]`` acting on ``diag(rho)``.

    With ``zeta = sqrt((d - a)^2 + 4 b c)`` the eigenvalues are
    ``(a + d)/2 +- zeta/2`` and the trace-one eigenstates are
    ``diag(a - d +- zeta, 2c) / (a - d +- zeta + 2c)``.
    """
    for name, x in zip("abcd", (a, b, c, d)):
        if not x > 0:
            raise ValidationError(f"{name} must be positive, got {x}")
    zeta = float(np.sqrt((d - a) ** 2 + 4 * b * c))
    lp = 0.5 * (a + d) + 0.5 * zeta
    lm = 0.5 * (a + d) - 0.5 * zeta

    def state(sign):
        num = a - d + sign * zeta
        den = num + 2 * c
        if abs(den) <= 1e-14 * (abs(num) + 2 * c):
            # traceless eigenvector: fall back to unit 1-norm
            den = abs(num) + 2 * c
        return np.diag([num / den, 2 * c / den]).astype(complex)

    gap = b / (1 - a) - (1 - d) / c if a != 1 else float("inf")
    return ClosedForm2x2(
        lambda_plus=lp,
        lambda_minus=lm,
        zeta=zeta,
        rho_plus=state(+1),
        rho_minus=state(-1),
        degenerate=zeta == 0.0,
        condition_gap=gap,
    )


def superoperator_matrix(V: KrausFamily) -> np.ndarray:
    """Matrix of ``rho -> sum V_i rho V_i^*`` on column-major ``vec(rho)``."""
    return sum(np.kron(v.conj(), v) for v in V.ops)


def vec(rho) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(x, n: int) -> np.ndarray:
    return np.asarray(x).reshape((n, n), order="F")


def superoperator_fixed_state(V: KrausFamily) -> np.ndarray:
    """Density matrix spanning the eigenvalue-1 eigenspace of the superoperator.

    Dense eigensolver oracle for homogeneous (linear) channels; assumes the
    eigenvalue 1 is simple.
    """
    n = V.dim
    vals, vecs = np.linalg.eig(superoperator_matrix(V))
    idx = int(np.argmin(np.abs(vals - 1.0)))
    if abs(vals[idx] - 1.0) > 1e-8:
        raise NonConvergence("superoperator has no eigenvalue 1", residual=float(abs(vals[idx] - 1.0)))
    r = unvec(vecs[:, idx], n)
    r = r / np.trace(r)
    return hermitize(r)
