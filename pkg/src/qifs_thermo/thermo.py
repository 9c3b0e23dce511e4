"""QIFS entropy, Markov entropy and the pressure inequalities.

The trace-form inequality for dynamics ``V``, weights ``W``, potential ``H``
and Ruelle eigenpair ``(beta, rho_beta)`` reads

    h_V(W) + sum_j tr(W_j rho_W W_j^*) ln(tr(H_j rho_beta H_j^*) tr(V_j rho_beta V_j^*)) <= ln beta

with equality exactly when every conditional law ``a_ij`` of the weights
after branch ``i`` equals ``r_j = tr(H_j rho_beta H_j^*) tr(V_j rho_beta V_j^*) / beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import (
    CoordinateDegenerate,
    DegenerateBranch,
    DegeneratePotential,
    Infeasible,
    PreconditionUnmet,
    Reducible,
    ValidationError,
)
from .markov import is_irreducible, stationary_vector, stochastic_matrix
from .matcore import eta_array, hs_distance, psd_sqrt
from .qifs import KrausFamily, QifsModel, conj_apply, lambda_apply
from .solvers import EigenResult, SolveConfig, solve_lambda_fixed_point

FIXED_POINT_CHECK = 1e-8
COORD_FLOOR = 1e-12


@dataclass
class PressureReport:
    entropy_term: float
    potential_term: float
    lhs: float
    log_beta: float
    gap: float
    equality_residual: float
    form: str = "trace"
    coordinate: tuple[int, int] | None = None

    def is_equality(self, tol: float = 1e-9) -> bool:
        return self.equality_residual <= tol


def conditional_weights(m: QifsModel, rho) -> tuple[np.ndarray, np.ndarray]:
    """Branch probabilities ``p_i`` and the matrix ``a_ij``.

    ``a_ij = tr(W_j V_i rho V_i^* W_j^*) / tr(V_i rho V_i^*)``. Rows of
    zero-weight degenerate branches are left as NaN.
    """
    rho = np.asarray(rho, dtype=complex)
    p = m.probs(rho)
    imgs = conj_apply(m.V.ops, rho)
    traces = np.einsum("kii->k", imgs).real
    floor = m.tol.branch_floor
    a = np.full((m.k, m.k), np.nan)
    for i in range(m.k):
        if traces[i] <= floor:
            if p[i] > floor:
                raise DegenerateBranch(i, traces[i], p[i])
            continue
        a[i] = np.clip(m.probs(imgs[i] / traces[i]), 0.0, None)
    return p, a


def _entropy_from(p, a) -> float:
    live = ~np.isnan(a[:, 0])
    return float(np.sum(p[live] * eta_array(a[live]).sum(axis=1)))


def assert_fixed_point(m: QifsModel, rho_w, tol: float = FIXED_POINT_CHECK) -> None:
    res = hs_distance(lambda_apply(m, rho_w), rho_w)
    if res > tol:
        raise ValidationError(f"state is not a fixed point of Lambda (residual {res:.3e})")


def qifs_entropy(m: QifsModel, rho_w) -> float:
    """``h_V(W) = -sum_i p_i(rho_W) sum_j a_ij ln a_ij`` at the fixed point ``rho_W``."""
    assert_fixed_point(m, rho_w)
    p, a = conditional_weights(m, rho_w)
    return _entropy_from(p, a)


def markov_entropy(P) -> float:
    """``H(P) = -sum_j pi_j sum_i p_ij ln p_ij`` for column-stochastic ``P``."""
    p = stochastic_matrix(P)
    if not is_irreducible(p):
        raise Reducible("stochastic matrix is reducible")
    pi = stationary_vector(p)
    return float(pi @ eta_array(p).sum(axis=0))


def _check_eig(H: KrausFamily, m: QifsModel, eig: EigenResult):
    if H.k != m.k or H.dim != m.dim:
        raise ValidationError("potential and model must have the same arity and dimension")
    if not eig.beta > 0:
        raise ValidationError("beta must be positive")


def _h_traces(H: KrausFamily, rho) -> np.ndarray:
    return np.einsum("kii->k", conj_apply(H.ops, np.asarray(rho, dtype=complex))).real


def pressure_check_trace_form(m: QifsModel, H: KrausFamily, eig: EigenResult, rho_w) -> PressureReport:
    """Evaluate both sides of the trace-form basic inequality.

    The log of each product ``tr(H_j rho_beta H_j^*) tr(V_j rho_beta V_j^*)``
    is taken as a sum of two logs. Terms with zero weight
    ``tr(W_j rho_W W_j^*)`` contribute nothing.
    """
    _check_eig(H, m, eig)
    assert_fixed_point(m, rho_w)
    p, a = conditional_weights(m, rho_w)
    th = _h_traces(H, eig.rho_beta)
    tv = np.einsum("kii->k", conj_apply(m.V.ops, eig.rho_beta)).real
    floor = m.tol.branch_floor
    logs = np.zeros(m.k)
    for j in range(m.k):
        if th[j] <= 0 or tv[j] <= 0:
            if p[j] > floor:
                raise DegeneratePotential(f"term {j}: tr(H rho H*)={th[j]:.3e}, tr(V rho V*)={tv[j]:.3e}")
            continue
        logs[j] = math.log(th[j]) + math.log(tv[j])
    r = th * tv / eig.beta
    return _report(p, a, r, logs, eig.beta, "trace", None)


def pressure_check_coordinate_form(
    m: QifsModel, H: KrausFamily, eig: EigenResult, rho_w, l: int, m_idx: int
) -> PressureReport:
    """Coordinate-form basic inequality at entry ``(l, m_idx)`` (zero-based).

    Uses the ratios ``(V_j rho_beta V_j^*)_{lm} / (rho_beta)_{lm}``; a ratio
    that is not a positive real on a branch with positive weight raises
    :class:`CoordinateDegenerate`.
    """
    _check_eig(H, m, eig)
    assert_fixed_point(m, rho_w)
    rb = eig.rho_beta
    denom = rb[l, m_idx]
    if abs(denom) <= COORD_FLOOR:
        raise CoordinateDegenerate(f"(rho_beta)[{l},{m_idx}] = {denom:.3e} is too small")
    p, a = conditional_weights(m, rho_w)
    th = _h_traces(H, rb)
    imgs = conj_apply(m.V.ops, rb)
    ratios = imgs[:, l, m_idx] / denom
    floor = m.tol.branch_floor
    logs = np.zeros(m.k)
    real_ratio = np.zeros(m.k)
    for j in range(m.k):
        ratio = ratios[j]
        if abs(ratio.imag) > 1e-10 * max(1.0, abs(ratio)) or ratio.real <= 0 or th[j] <= 0:
            if p[j] > floor:
                raise CoordinateDegenerate(
                    f"branch {j}: ratio {complex(ratio):.6g} and tr(H rho H*)={th[j]:.3e} give no real log"
                )
            continue
        real_ratio[j] = ratio.real
        logs[j] = math.log(th[j]) + math.log(ratio.real)
    r = th * real_ratio / eig.beta
    return _report(p, a, r, logs, eig.beta, "coordinate", (l, m_idx))


def pressure_check_all_coordinates(m: QifsModel, H: KrausFamily, eig: EigenResult, rho_w) -> dict:
    """Coordinate-form report for every entry ``(l, m)``.

    Entries where the form is undefined map to the
    :class:`CoordinateDegenerate` instance explaining why.
    """
    out = {}
    for l in range(m.dim):
        for mi in range(m.dim):
            try:
                out[(l, mi)] = pressure_check_coordinate_form(m, H, eig, rho_w, l, mi)
            except CoordinateDegenerate as exc:
                out[(l, mi)] = exc
    return out


def _report(p, a, r, logs, beta, form, coord) -> PressureReport:
    entropy = _entropy_from(p, a)
    potential = float(np.dot(p, logs))
    lhs = entropy + potential
    log_beta = math.log(beta)
    live = ~np.isnan(a[:, 0])
    resid = float(np.max(np.abs(a[live] - r[None, :]))) if live.any() else 0.0
    return PressureReport(
        entropy_term=entropy,
        potential_term=potential,
        lhs=lhs,
        log_beta=log_beta,
        gap=log_beta - lhs,
        equality_residual=resid,
        form=form,
        coordinate=coord,
    )


def perron_left(A) -> tuple[float, np.ndarray]:
    """Dominant eigenvalue and left eigenvector (unit 1-norm) of ``E^A``."""
    from .matcore import dominant_eigenpair

    beta, v = dominant_eigenpair(np.exp(np.asarray(A, dtype=float)).T)
    return beta, v


def classic_inequality_check(A, Q) -> PressureReport:
    """Entropy-plus-potential inequality for a chain ``Q`` and potential ``A``.

    ``lhs = -sum_j pi_j sum_i q_ij ln q_ij + sum_j pi_j sum_i q_ij a_ij`` and
    the bound is ``ln beta`` with ``beta`` the Perron root of
    ``E^A = (exp(a_ij))``. The equality residual compares ``q_ij`` with
    ``exp(a_ij) v_i / (beta v_j)``, ``v`` the left Perron vector.
    """
    a = np.asarray(A, dtype=float)
    q = stochastic_matrix(Q)
    if a.shape != q.shape or not np.all(np.isfinite(a)):
        raise ValidationError("A must be finite and shaped like Q")
    if not is_irreducible(q):
        raise Reducible("Q is reducible")
    pi = stationary_vector(q)
    entropy = float(pi @ eta_array(q).sum(axis=0))
    potential = float(pi @ (q * a).sum(axis=0))
    beta, v = perron_left(a)
    r = np.exp(a) * v[:, None] / (beta * v[None, :])
    lhs = entropy + potential
    log_beta = math.log(beta)
    return PressureReport(
        entropy_term=entropy,
        potential_term=potential,
        lhs=lhs,
        log_beta=log_beta,
        gap=log_beta - lhs,
        equality_residual=float(np.max(np.abs(q - r))),
        form="classic",
    )


def classic_maximizer(A) -> np.ndarray:
    """Column-stochastic ``Q`` attaining equality: ``q_ij = exp(a_ij) v_i / (beta v_j)``."""
    a = np.asarray(A, dtype=float)
    beta, v = perron_left(a)
    return np.exp(a) * v[:, None] / (beta * v[None, :])


def maximizing_weights(V: KrausFamily, H: KrausFamily, eig: EigenResult, rho_w=None, tol: float = 1e-10) -> KrausFamily:
    """Scalar weights that turn the trace-form inequality into an equality.

    Returns ``W_j = sqrt(tr(H_j rho_beta H_j^*) tr(V_j rho_beta V_j^*) / beta) I``.
    For unitary dynamics ``tr(V_j rho V_j^*) = 1`` and this is
    ``sqrt(tr(H_j rho_beta H_j^*) / beta) I``. Requires unitary ``V``,
    scalar ``V``, or a ``rho_w`` that every branch fixes.
    """
    if H.k != V.k or H.dim != V.dim:
        raise ValidationError("H and V must have the same arity and dimension")
    ok = V.is_unitary(tol) or V.is_scalar()
    if not ok and rho_w is not None:
        imgs = conj_apply(V.ops, np.asarray(rho_w, dtype=complex))
        traces = np.einsum("kii->k", imgs).real
        ok = bool(np.all(traces > 0)) and all(
            np.max(np.abs(imgs[i] / traces[i] - rho_w)) <= tol for i in range(V.k)
        )
    if not ok:
        raise PreconditionUnmet("dynamics are neither unitary nor scalar, and rho_W does not fix every branch")
    th = _h_traces(H, eig.rho_beta)
    if np.any(th <= 0):
        raise PreconditionUnmet("every tr(H_j rho_beta H_j^*) must be positive")
    tv = np.einsum("kii->k", conj_apply(V.ops, eig.rho_beta)).real
    r = th * tv / eig.beta
    eye = np.eye(V.dim)
    return KrausFamily(np.stack([np.sqrt(x) * eye for x in r]))


def renormalize_potential(H: KrausFamily, alpha: float) -> KrausFamily:
    """``H -> sqrt(alpha) H``; scales ``beta`` by ``alpha`` and keeps ``rho_beta``."""
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    return H.scaled(math.sqrt(alpha))


def mix_with_uniform(W: KrausFamily, t: float) -> KrausFamily:
    """Weights whose POVM is ``(1 - t) I/k + t W_i^* W_i``.

    Each operator is the PSD square root of its mixed POVM element, so the
    family stays normalized for every ``t`` in ``[0, 1]``.
    """
    if not 0 <= t <= 1:
        raise ValidationError("t must lie in [0, 1]")
    eye = np.eye(W.dim)
    elems = [(1 - t) * eye / W.k + t * (w.conj().T @ w) for w in W.ops]
    return KrausFamily(np.stack([psd_sqrt(e) for e in elems]))


@dataclass
class CapacityCandidate:
    W: KrausFamily
    rho_w: np.ndarray
    entropy: float
    cost: float
    label: object = None


def evaluate_candidates(V: KrausFamily, candidates: Iterable, cost_op, cfg: SolveConfig | None = None):
    """Solve ``rho_W`` and evaluate ``(h_V(W), tr(H rho_W))`` for each candidate.

    ``candidates`` yields either ``KrausFamily`` objects or ``(label, W)`` pairs.
    """
    cost_op = np.asarray(cost_op, dtype=complex)
    out = []
    for item in candidates:
        label, W = item if isinstance(item, tuple) else (None, item)
        m = QifsModel(V, W)
        rho, _, _ = solve_lambda_fixed_point(m, cfg)
        out.append(CapacityCandidate(W, rho, qifs_entropy(m, rho), float(np.trace(cost_op @ rho).real), label))
    return out


def capacity_cost(V: KrausFamily, candidates: Iterable, cost_op, a: float, cfg: SolveConfig | None = None):
    """Grid approximation of ``C(a) = max{h_V(W) : tr(H rho_W) <= a}``.

    Only the supplied candidates are searched, so the value is a lower bound
    on the supremum over all invariant measures. Returns ``(value, best)``.
    """
    evaluated = candidates if _is_evaluated(candidates) else evaluate_candidates(V, candidates, cost_op, cfg)
    feasible = [c for c in evaluated if c.cost <= a]
    if not feasible:
        raise Infeasible(f"no candidate has cost <= {a}")
    best = max(feasible, key=lambda c: c.entropy)
    return best.entropy, best


def _is_evaluated(candidates) -> bool:
    return isinstance(candidates, list) and bool(candidates) and isinstance(candidates[0], CapacityCandidate)


def lagrangian_argmax(evaluated: list[CapacityCandidate], lam: float) -> CapacityCandidate:
    """Candidate maximizing ``h - lam * cost``."""
    return max(evaluated, key=lambda c: c.entropy - lam * c.cost)


def stochastic_weight_family(q_values: Iterable[float]) -> Callable:
    """Grid of 4-operator diagonal-weight families indexed by ``(q00, q01)``."""
    from .markov import _units

    def gen():
        for q00 in q_values:
            for q01 in q_values:
                q = np.array([[q00, q01], [1 - q00, 1 - q01]])
                yield (q00, q01), KrausFamily.of(_units(np.sqrt(q)))

    return gen
