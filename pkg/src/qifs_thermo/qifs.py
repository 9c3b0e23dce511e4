"""Quantum iterated function systems.

A model pairs a dynamics family ``V`` with a weight family ``W``. Branch ``i``
maps ``rho`` to ``F_i(rho) = V_i rho V_i^* / tr(V_i rho V_i^*)`` and is chosen
with probability ``p_i(rho) = tr(W_i rho W_i^*)``. The nonlinear channel is
``Lambda(rho) = sum_i p_i(rho) F_i(rho)``; its dual acts on observables as
``(U f)(rho) = sum_i p_i(rho) f(F_i(rho))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import CapExceeded, DegenerateBranch, NotNormalized, ValidationError
from .matcore import DEFAULT_TOL, Tolerances, eta_array, hermitize, maximally_mixed

ENUMERATION_CAP = 10**6


@dataclass(frozen=True, eq=False)
class KrausFamily:
    """Ordered list of ``k`` square matrices of equal dimension.

    ``ops`` is stored as a ``(k, N, N)`` complex array. ``normalized`` records
    whether ``sum K_i^* K_i = I`` holds to ``normalization_tol``.
    """

    ops: np.ndarray
    normalization_tol: float = DEFAULT_TOL.normalization
    normalized: bool = field(init=False)

    def __post_init__(self):
        ops = np.asarray(self.ops, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2] or ops.shape[0] == 0:
            raise ValidationError(f"Kraus family must have shape (k, N, N), got {ops.shape}")
        if not np.all(np.isfinite(ops)):
            raise ValidationError("Kraus family has non-finite entries")
        ops = ops.copy()
        ops.setflags(write=False)
        object.__setattr__(self, "ops", ops)
        object.__setattr__(self, "normalized", self.normalization_error() <= self.normalization_tol)

    @classmethod
    def of(cls, mats: Sequence, **kw) -> "KrausFamily":
        return cls(np.stack([np.asarray(m, dtype=complex) for m in mats]), **kw)

    @property
    def k(self) -> int:
        return self.ops.shape[0]

    @property
    def dim(self) -> int:
        return self.ops.shape[1]

    def __len__(self):
        return self.k

    def __getitem__(self, i):
        return self.ops[i]

    def __iter__(self):
        return iter(self.ops)

    def gram(self) -> np.ndarray:
        """``sum_i K_i^* K_i``."""
        return np.einsum("kji,kjl->il", self.ops.conj(), self.ops)

    def normalization_error(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(self.dim))))

    def scaled(self, factor: float) -> "KrausFamily":
        return KrausFamily(self.ops * factor, normalization_tol=self.normalization_tol)

    def is_unitary(self, tol: float = 1e-10) -> bool:
        eye = np.eye(self.dim)
        return all(np.max(np.abs(v @ v.conj().T - eye)) <= tol for v in self.ops)

    def is_scalar(self, tol: float = 1e-12) -> bool:
        """True when every operator is a multiple of the identity."""
        for v in self.ops:
            c = np.trace(v) / self.dim
            if np.max(np.abs(v - c * np.eye(self.dim))) > tol:
                return False
        return True


def conj_apply(ops: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Stack of ``K_i rho K_i^*`` for every operator in ``ops``."""
    return ops @ rho @ ops.conj().transpose(0, 2, 1)


@dataclass(frozen=True, eq=False)
class QifsModel:
    """Dynamics ``V`` and normalized weights ``W`` of equal arity and dimension."""

    V: KrausFamily
    W: KrausFamily
    tol: Tolerances = DEFAULT_TOL

    def __post_init__(self):
        if not isinstance(self.V, KrausFamily):
            object.__setattr__(self, "V", KrausFamily(self.V))
        if not isinstance(self.W, KrausFamily):
            object.__setattr__(self, "W", KrausFamily(self.W))
        if self.V.dim != self.W.dim:
            raise ValidationError(f"V has dimension {self.V.dim} but W has {self.W.dim}")
        if self.V.k != self.W.k:
            raise ValidationError(f"V has {self.V.k} operators but W has {self.W.k}")
        err = self.W.normalization_error()
        if err > self.tol.normalization:
            raise NotNormalized(f"weights are not normalized: |sum W*W - I| = {err:.3e}")
        # p_i(rho) = tr(M_i rho) with M_i = W_i^* W_i, evaluated as one matvec
        wg = np.einsum("kji,kjl->kil", self.W.ops.conj(), self.W.ops)
        object.__setattr__(self, "_prob_rows", wg.transpose(0, 2, 1).reshape(self.k, -1))

    @classmethod
    def homogeneous(cls, V: KrausFamily, tol: Tolerances = DEFAULT_TOL) -> "QifsModel":
        return cls(V, V, tol)

    @property
    def k(self) -> int:
        return self.V.k

    @property
    def dim(self) -> int:
        return self.V.dim

    @property
    def is_homogeneous(self) -> bool:
        return self.V is self.W or np.array_equal(self.V.ops, self.W.ops)

    def probs(self, rho: np.ndarray) -> np.ndarray:
        """All branch probabilities ``tr(W_i rho W_i^*)`` at once."""
        p = (self._prob_rows @ np.asarray(rho, dtype=complex).ravel()).real
        return np.clip(p, 0.0, None)

    def seed_state(self) -> np.ndarray:
        return maximally_mixed(self.dim)


def _check_index(m: QifsModel, i: int) -> None:
    if not 0 <= i < m.k:
        raise IndexError(f"branch index {i} out of range for k={m.k}")


def branch_prob(m: QifsModel, i: int, rho) -> float:
    """``p_i(rho) = tr(W_i rho W_i^*)`` for a zero-based branch index."""
    _check_index(m, i)
    return float(m.probs(rho)[i])


def branch_map(m: QifsModel, i: int, rho) -> np.ndarray:
    """``F_i(rho)``; raises :class:`DegenerateBranch` when the trace vanishes."""
    _check_index(m, i)
    v = m.V.ops[i]
    out = v @ rho @ v.conj().T
    t = np.trace(out).real
    if t <= m.tol.branch_floor:
        raise DegenerateBranch(i, t, float(m.probs(rho)[i]))
    return hermitize(out / t)


def _branches(m: QifsModel, rho):
    """Probabilities, unnormalized images and their traces for every branch."""
    imgs = conj_apply(m.V.ops, rho)
    traces = np.einsum("kii->k", imgs).real
    return m.probs(rho), imgs, traces


def lambda_apply(m: QifsModel, rho) -> np.ndarray:
    """``Lambda(rho) = sum_i p_i(rho) F_i(rho)``.

    Branches whose image trace and weight both fall below ``branch_floor``
    are dropped; a degenerate branch with positive weight raises.
    """
    rho = np.asarray(rho, dtype=complex)
    p, imgs, traces = _branches(m, rho)
    floor = m.tol.branch_floor
    out = np.zeros_like(rho)
    for i in range(m.k):
        if traces[i] <= floor:
            if p[i] > floor:
                raise DegenerateBranch(i, traces[i], p[i])
            continue
        out += (p[i] / traces[i]) * imgs[i]
    return hermitize(out)


def lambda_homogeneous(V: KrausFamily, rho) -> np.ndarray:
    """Linear completely positive map ``sum_i V_i rho V_i^*``."""
    return hermitize(conj_apply(V.ops, np.asarray(rho, dtype=complex)).sum(axis=0))


def dual_apply(m: QifsModel, f: Callable[[np.ndarray], float], rho) -> float:
    """``(U f)(rho) = sum_i p_i(rho) f(F_i(rho))``."""
    rho = np.asarray(rho, dtype=complex)
    p, imgs, traces = _branches(m, rho)
    floor = m.tol.branch_floor
    total = 0.0
    for i in range(m.k):
        if p[i] <= floor and traces[i] <= floor:
            continue
        if traces[i] <= floor:
            raise DegenerateBranch(i, traces[i], p[i])
        total += p[i] * f(hermitize(imgs[i] / traces[i]))
    return float(total)


def shannon_observable(m: QifsModel) -> Callable[[np.ndarray], float]:
    """The observable ``h(rho) = sum_i eta(p_i(rho))``."""
    return lambda rho: float(eta_array(m.probs(rho)).sum())


def linear_functional(a) -> Callable[[np.ndarray], float]:
    """``rho -> Re tr(a rho)``."""
    a = np.asarray(a, dtype=complex)
    return lambda rho: float(np.trace(a @ rho).real)


def word_prob_and_map(m: QifsModel, word: Sequence[int], rho):
    """Probability ``p_w(rho)`` and image ``F_w(rho)`` of a word.

    Letters are zero-based branch indices applied left to right. A word whose
    probability drops to zero returns ``(0.0, rho)``.
    """
    if len(word) == 0:
        raise ValidationError("word must have at least one letter")
    state = np.asarray(rho, dtype=complex)
    prob = 1.0
    floor = m.tol.branch_floor
    for i in word:
        _check_index(m, i)
        p = m.probs(state)[i]
        v = m.V.ops[i]
        img = v @ state @ v.conj().T
        t = np.trace(img).real
        if p <= floor or t <= floor:
            if p > floor:
                raise DegenerateBranch(i, t, p)
            return 0.0, np.asarray(rho, dtype=complex)
        prob *= p
        state = hermitize(img / t)
    return float(prob), state


def iter_words(m: QifsModel, rho, n: int, cap: int = ENUMERATION_CAP) -> Iterator[tuple[tuple[int, ...], float, np.ndarray]]:
    """Depth-first enumeration of all words of length ``n`` with positive weight.

    Yields ``(word, p_word, F_word(rho))``. Zero-weight prefixes are pruned,
    so their descendants (all of weight zero) never appear.
    """
    if m.k ** n > cap:
        raise CapExceeded(f"{m.k}**{n} words exceeds the enumeration cap {cap}")
    floor = m.tol.branch_floor

    def rec(prefix, prob, state, depth):
        if depth == n:
            yield prefix, prob, state
            return
        p, imgs, traces = _branches(m, state)
        for i in range(m.k):
            if p[i] <= floor:
                continue
            if traces[i] <= floor:
                raise DegenerateBranch(i, traces[i], p[i])
            yield from rec(prefix + (i,), prob * p[i], hermitize(imgs[i] / traces[i]), depth + 1)

    yield from rec((), 1.0, np.asarray(rho, dtype=complex), 0)


def partial_entropy(m: QifsModel, rho, n: int, cap: int = ENUMERATION_CAP) -> float:
    """``H_n(rho) = sum over words of length n of eta(p_w(rho))``; ``H_0 = 0``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return 0.0
    probs = np.fromiter((p for _, p, _ in iter_words(m, rho, n, cap)), dtype=float)
    return float(eta_array(probs).sum())


def iterated_dual_entropy(m: QifsModel, rho, n: int, cap: int = ENUMERATION_CAP) -> float:
    """``(U^n h)(rho)`` by exhaustive word enumeration."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    h = shannon_observable(m)
    if n == 0:
        return h(np.asarray(rho, dtype=complex))
    return float(sum(p * h(state) for _, p, state in iter_words(m, rho, n, cap)))
