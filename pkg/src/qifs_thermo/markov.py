"""Classical Markov chains and their embeddings into QIFS.

All stochastic matrices are column-stochastic: ``P[i, j]`` is the probability
of moving from state ``j`` to state ``i`` and the stationary vector solves
``P pi = pi``.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import EmbeddingDegenerate, Reducible, ValidationError
from .matcore import hs_distance
from .qifs import KrausFamily, QifsModel, lambda_homogeneous
from .rand import random_density, stream

STOCHASTIC_TOL = 1e-12


class EmbeddingKind(enum.Enum):
    HOM4 = "hom4"
    NONHOM4 = "nonhom4"
    HOM2 = "hom2"
    NONHOM2 = "nonhom2"
    PERRON_POTENTIAL = "perron"
    CLASSIC_BRIDGE = "classic"

    @property
    def arity(self) -> int:
        return {"hom4": 4, "nonhom4": 4, "hom2": 2, "nonhom2": 2, "perron": 2, "classic": 4}[self.value]

    @property
    def homogeneous(self) -> bool:
        return self in (EmbeddingKind.HOM4, EmbeddingKind.HOM2)


def stochastic_matrix(p, tol: float = STOCHASTIC_TOL) -> np.ndarray:
    """Validate a column-stochastic matrix and return it as a float array."""
    a = np.asarray(p, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"stochastic matrix must be square, got shape {a.shape}")
    if np.any(a < 0):
        raise ValidationError("stochastic matrix has negative entries")
    err = np.max(np.abs(a.sum(axis=0) - 1.0))
    if err > tol:
        raise ValidationError(f"columns do not sum to 1 (max error {err:.3e})")
    return a


def is_irreducible(p) -> bool:
    a = np.asarray(p, dtype=float)
    n = a.shape[0]
    reach = np.linalg.matrix_power(np.eye(n) + (a > 0), n)
    return bool(np.all(reach > 0))


def stationary_vector(p) -> np.ndarray:
    """Stationary distribution by Grassmann-Taksar-Heyman elimination.

    GTH avoids subtractions, so the result is accurate to rounding even for
    nearly decomposable chains.
    """
    a = stochastic_matrix(p).copy()
    if not is_irreducible(a):
        raise Reducible("stochastic matrix is reducible")
    n = a.shape[0]
    for k in range(n - 1, 0, -1):
        s = a[:k, k].sum()
        a[k, :k] /= s
        a[:k, :k] += np.outer(a[:k, k], a[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = a[k, 0] + a[k, 1:k] @ pi[1:k]
    return pi / pi.sum()


def stationary_vector_2x2(p) -> np.ndarray:
    """Closed form ``(p01, 1 - p00) / (p01 - p00 + 1)``."""
    a = stochastic_matrix(p)
    if a.shape != (2, 2):
        raise ValidationError("closed form needs a 2x2 matrix")
    den = a[0, 1] - a[0, 0] + 1.0
    return np.array([a[0, 1], 1.0 - a[0, 0]]) / den


def _positive_2x2(p, name):
    a = stochastic_matrix(p)
    if a.shape != (2, 2):
        raise ValidationError(f"{name} must be 2x2")
    if np.any(a <= 0):
        raise EmbeddingDegenerate(f"{name} has a zero entry")
    return a


def _units(scale) -> list[np.ndarray]:
    """``[s00 E11, s01 E12, s10 E21, s11 E22]`` for a 2x2 array of scales."""
    out = []
    for i in range(2):
        for j in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[i, j] = scale[i, j]
            out.append(e)
    return out


def _columns(scale) -> list[np.ndarray]:
    """Two operators: column ``j`` of ``scale`` placed in column ``j``."""
    out = []
    for j in range(2):
        e = np.zeros((2, 2), dtype=complex)
        e[:, j] = scale[:, j]
        out.append(e)
    return out


def embed_stochastic(P, Q=None, kind: EmbeddingKind | str = EmbeddingKind.HOM4) -> QifsModel:
    """QIFS whose entropy reproduces a Markov-chain entropy.

    ``hom4``/``nonhom4`` use four elementary operators with ``sqrt(p_ij)``
    entries; ``hom2``/``nonhom2`` pack each column of ``sqrt(P)`` into one
    operator. Nonhomogeneous variants take the weights from ``Q``. The
    governing chain (see :func:`governing_matrix`) is ``P`` except for
    ``nonhom4``, where the ``p_ij`` cancel and ``Q`` governs.
    """
    kind = EmbeddingKind(kind)
    if kind not in (EmbeddingKind.HOM4, EmbeddingKind.NONHOM4, EmbeddingKind.HOM2, EmbeddingKind.NONHOM2):
        raise ValidationError(f"{kind.value} is not a stochastic embedding")
    p = _positive_2x2(P, "P")
    build = _units if kind.arity == 4 else _columns
    V = KrausFamily.of(build(np.sqrt(p)))
    if kind.homogeneous:
        if Q is not None:
            raise ValidationError(f"{kind.value} is homogeneous and takes no Q")
        return QifsModel(V, V)
    if Q is None:
        raise ValidationError(f"{kind.value} needs a weight matrix Q")
    q = _positive_2x2(Q, "Q")
    W = KrausFamily.of(build(np.sqrt(q)))
    return QifsModel(V, W)


def governing_matrix(P, Q, kind: EmbeddingKind | str) -> np.ndarray:
    kind = EmbeddingKind(kind)
    return np.asarray(Q if kind is EmbeddingKind.NONHOM4 else P, dtype=float)


def embed_perron(A):
    """``(V, H)`` whose Ruelle eigenproblem is the Perron problem of ``A``.

    ``V_1 = [[1, 1], [0, 0]]``, ``V_2 = [[0, 0], [1, 1]]`` and
    ``H_i = diag(sqrt(a_i1), sqrt(a_i2))``, so on diagonal states
    ``L_H`` acts as ``A`` on ``diag(rho)``.
    """
    a = np.asarray(A, dtype=float)
    if a.shape != (2, 2):
        raise ValidationError("A must be 2x2")
    if np.any(a <= 0):
        raise EmbeddingDegenerate("A must have positive entries")
    V = KrausFamily.of([[[1, 1], [0, 0]], [[0, 0], [1, 1]]])
    H = KrausFamily.of([np.diag(np.sqrt(a[0])), np.diag(np.sqrt(a[1]))])
    return V, H


def embed_diagonal_2x2(a, b, c, d):
    """``(V, H)`` with elementary ``V`` and ``H_i = sqrt(x_i) I``.

    ``L_H`` then acts on ``diag(rho)`` as ``[[a, b], [c, d]]``; used to
    cross-check :func:`closed_form_2x2_diagonal`.
    """
    vals = np.array([a, b, c, d], dtype=float)
    if np.any(vals <= 0):
        raise ValidationError("entries must be positive")
    V = KrausFamily.of(_units(np.ones((2, 2))))
    H = KrausFamily.of([np.sqrt(x) * np.eye(2) for x in vals])
    return V, H


def embed_classic_bridge(A, Q):
    """Model and potential that turn the coordinate-form inequality into the classic one.

    ``V_i`` are the elementary units, ``W_i`` carry ``sqrt(q_ij)`` in the
    same positions, and the potential ``H_ij`` is the rank-one matrix with
    ``sqrt(exp(a_ij))`` across row ``i``. Branch order is 11, 12, 21, 22.
    """
    a = np.asarray(A, dtype=float)
    if a.shape != (2, 2) or not np.all(np.isfinite(a)):
        raise ValidationError("A must be a finite 2x2 matrix")
    q = _positive_2x2(Q, "Q")
    V = KrausFamily.of(_units(np.ones((2, 2))))
    W = KrausFamily.of(_units(np.sqrt(q)))
    hs = []
    for i in range(2):
        for j in range(2):
            h = np.zeros((2, 2), dtype=complex)
            h[i, :] = np.sqrt(np.exp(a[i, j]))
            hs.append(h)
    return QifsModel(V, W), KrausFamily.of(hs)


def elementary_kraus(P) -> KrausFamily:
    """``V_ij = sqrt(p_ij) |i><j|`` for an ``n x n`` stochastic matrix."""
    p = stochastic_matrix(P)
    n = p.shape[0]
    ops = np.zeros((n * n, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            ops[i * n + j, i, j] = np.sqrt(p[i, j])
    return KrausFamily(ops)


def natural_weights(P) -> np.ndarray:
    """Constant weights ``q = 1/p_ij`` (order 00, 01, 10, 11)."""
    p = _positive_2x2(P, "P")
    return 1.0 / p.ravel()


def family_weights(P, q1: float, q3: float) -> np.ndarray:
    """One-parameter family of weights that also fixes ``diag(pi)``.

    ``q2 = (1 - q1 p00^2)/(p01 p10)`` and ``q4 = (1 - q3 p10 p01)/p11^2``.
    """
    p = _positive_2x2(P, "P")
    q2 = (1 - q1 * p[0, 0] ** 2) / (p[0, 1] * p[1, 0])
    q4 = (1 - q3 * p[1, 0] * p[0, 1]) / p[1, 1] ** 2
    return np.array([q1, q2, q3, q4])


def weighted_perron_operator(P, weights):
    """``(V, H)`` for ``L(rho) = sum_i q_i V_i rho V_i^*`` with ``V_i`` carrying ``p_ij``.

    ``H_i = sqrt(q_i) I`` makes ``tr(H_i rho H_i^*) = q_i`` on density
    matrices, so the Ruelle solver handles the constant-weight operator.
    """
    p = _positive_2x2(P, "P")
    w = np.asarray(weights, dtype=float)
    if w.shape != (4,) or np.any(w < 0):
        raise ValidationError("weights must be four nonnegative numbers")
    V = KrausFamily.of(_units(p))
    H = KrausFamily.of([np.sqrt(x) * np.eye(2) for x in w])
    return V, H


def _power_channel(V: KrausFamily, rho, n):
    for _ in range(n):
        rho = lambda_homogeneous(V, rho)
    return rho


def markov_power_identity(P, n: int, n_states: int = 16, seed: int = 0) -> float:
    """Max over random states of ``D_1(Lambda_P^n(rho), Lambda_{P^n}(rho))``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    p = stochastic_matrix(P)
    dim = p.shape[0]
    Vp = elementary_kraus(p)
    Vpn = elementary_kraus(np.linalg.matrix_power(p, n))
    rng = stream(seed, 0)
    dev = 0.0
    for _ in range(n_states):
        rho = random_density(rng, dim)
        dev = max(dev, hs_distance(_power_channel(Vp, rho, n), lambda_homogeneous(Vpn, rho)))
    return dev


def markov_power_limit(P, n: int, n_states: int = 16, seed: int = 0) -> float:
    """Max over random states of ``D_1(Lambda_P^n(rho), Lambda_Pi(rho))``.

    ``Pi`` is the rank-one stochastic matrix whose columns all equal the
    stationary vector, so ``Lambda_Pi(rho) = diag(pi)``.
    """
    p = stochastic_matrix(P)
    dim = p.shape[0]
    pi = stationary_vector(p)
    Vpi = elementary_kraus(np.tile(pi[:, None], (1, dim)))
    Vp = elementary_kraus(p)
    rng = stream(seed, 1)
    dev = 0.0
    for _ in range(n_states):
        rho = random_density(rng, dim)
        dev = max(dev, hs_distance(_power_channel(Vp, rho, n), lambda_homogeneous(Vpi, rho)))
    return dev
