"""Ensembles induced by a QIFS and Holevo-bound checks.

Branch ``i`` of a model at its fixed point ``rho_W`` induces the diagonal
state ``rho_i = sum_j a_ij |j><j|`` on a ``k``-dimensional label space, with
weight ``p_i = tr(W_i rho_W W_i^*)``. The label space is separate from the
``N``-dimensional system space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBranch, NotNormalized, ValidationError
from .matcore import density_matrix, eta_array, psd_sqrt, von_neumann_entropy
from .qifs import KrausFamily, QifsModel, branch_map
from .rand import ginibre

PROB_TOL = 1e-12
POVM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Ensemble:
    states: tuple
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or len(probs) != len(self.states) or len(probs) == 0:
            raise ValidationError("need one probability per state")
        if np.any(probs < -PROB_TOL) or abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValidationError("probabilities must be nonnegative and sum to 1")
        states = tuple(density_matrix(s) for s in self.states)
        if len({s.shape for s in states}) != 1:
            raise ValidationError("all states must share a dimension")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "probs", np.clip(probs, 0.0, None))

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    def average(self) -> np.ndarray:
        return np.tensordot(self.probs, np.stack(self.states), axes=1)


@dataclass(frozen=True, eq=False)
class Povm:
    elements: tuple

    def __post_init__(self):
        els = tuple(np.asarray(e, dtype=complex) for e in self.elements)
        if not els:
            raise ValidationError("a POVM needs at least one element")
        n = els[0].shape[0]
        for e in els:
            if e.shape != (n, n) or np.max(np.abs(e - e.conj().T)) > POVM_TOL:
                raise ValidationError("POVM elements must be Hermitian and share a dimension")
            if np.linalg.eigvalsh(e).min() < -POVM_TOL:
                raise ValidationError("POVM element is not positive semidefinite")
        err = np.max(np.abs(sum(els) - np.eye(n)))
        if err > POVM_TOL:
            raise ValidationError(f"POVM elements sum to I only within {err:.3e}")
        object.__setattr__(self, "elements", els)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]


def induced_ensemble(m: QifsModel, rho_w) -> Ensemble:
    """Diagonal label-space states ``rho_i = diag(a_i.)`` weighted by ``p_i(rho_W)``.

    Zero-weight degenerate branches get the uniform label state; they do not
    affect any ensemble average.
    """
    from .thermo import conditional_weights

    p, a = conditional_weights(m, rho_w)
    p = p / p.sum()
    states = []
    for i in range(m.k):
        row = np.full(m.k, 1.0 / m.k) if np.isnan(a[i, 0]) else a[i] / a[i].sum()
        states.append(np.diag(row).astype(complex))
    return Ensemble(tuple(states), p)


def holevo_information(e: Ensemble) -> float:
    """``xi = S(sum p_i rho_i) - sum p_i S(rho_i)``."""
    avg = von_neumann_entropy(e.average())
    return avg - float(sum(p * von_neumann_entropy(s) for p, s in zip(e.probs, e.states)))


def povm_from_weights(W: KrausFamily) -> Povm:
    if not W.normalized:
        raise NotNormalized(f"weights are not normalized: |sum W*W - I| = {W.normalization_error():.3e}")
    return Povm(tuple(w.conj().T @ w for w in W.ops))


def mutual_information(joint) -> float:
    """``I(X:Y) = H(X) + H(Y) - H(X, Y)`` for a joint table ``p(x, y)``."""
    j = np.asarray(joint, dtype=float)
    if np.any(j < -PROB_TOL) or abs(j.sum() - 1.0) > 1e-9:
        raise ValidationError("joint distribution must be nonnegative and sum to 1")
    j = np.clip(j, 0.0, None)
    hx = eta_array(j.sum(axis=1)).sum()
    hy = eta_array(j.sum(axis=0)).sum()
    hxy = eta_array(j).sum()
    return float(max(hx + hy - hxy, 0.0))


def born_joint(e: Ensemble, povm: Povm) -> np.ndarray:
    """``p(x, y) = p_x tr(P_y rho_x)``."""
    if povm.dim != e.dim:
        raise ValidationError(f"POVM acts on dimension {povm.dim}, states have {e.dim}")
    table = np.array([[px * np.trace(el @ s).real for el in povm.elements] for px, s in zip(e.probs, e.states)])
    return np.clip(table, 0.0, None)


def label_povm(m: QifsModel, rho_w, povm: Povm) -> Povm:
    """Move a system-space POVM onto the label space.

    Label ``j`` is probed by the post-branch state ``F_j(rho_W)``: element
    ``y`` becomes ``diag_j tr(P_y F_j(rho_W))``. Each diagonal entry is a
    probability and they sum to 1 over ``y``, so the result is a POVM.
    """
    if povm.dim != m.dim:
        raise ValidationError("POVM must act on the system space")
    probes = []
    for j in range(m.k):
        try:
            probes.append(branch_map(m, j, rho_w))
        except DegenerateBranch:
            probes.append(np.eye(m.dim) / m.dim)
    elements = []
    for el in povm.elements:
        elements.append(np.diag([np.trace(el @ f).real for f in probes]).astype(complex))
    total = sum(elements)
    # absorb rounding so completeness holds to machine precision
    elements[-1] = elements[-1] + (np.eye(m.k) - total)
    return Povm(tuple(elements))


def random_povm(rng, n: int, outcomes: int) -> Povm:
    """``E_y = S^{-1/2} G_y G_y^* S^{-1/2}`` with ``S = sum G_y G_y^*``."""
    gs = [ginibre(rng, n) for _ in range(outcomes)]
    raw = [g @ g.conj().T for g in gs]
    s = sum(raw)
    s_inv = np.linalg.inv(psd_sqrt(s))
    els = [s_inv @ r @ s_inv.conj().T for r in raw]
    els = [0.5 * (e + e.conj().T) for e in els]
    els[-1] = els[-1] + (np.eye(n) - sum(els))
    return Povm(tuple(els))
