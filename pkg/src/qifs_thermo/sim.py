"""Monte Carlo sampling of the Markov operator on density matrices.

A trajectory draws branch ``i`` with probability ``p_i(rho_t)`` and moves to
``F_i(rho_t)``. Averages over a post-burn-in trajectory estimate integrals
against an invariant measure. Standard errors use batch means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBranch, ValidationError
from .matcore import density_matrix, eta_array, hermitize, hs_distance
from .qifs import QifsModel
from .rand import random_density, stream

BURN_IN = 1000
SAMPLES = 100_000
BATCHES = 50


@dataclass
class Trajectory:
    states: np.ndarray
    branches: np.ndarray
    probs: np.ndarray
    seed: int
    stream_id: int = 0

    def __len__(self):
        return len(self.branches)


@dataclass
class Estimate:
    value: np.ndarray | float
    stderr: np.ndarray | float
    samples: int

    @property
    def stderr_norm(self) -> float:
        """Frobenius norm of the entrywise standard errors."""
        return float(np.linalg.norm(np.atleast_1d(self.stderr)))


def sample_trajectory(m: QifsModel, rho0, steps: int, seed: int, stream_id: int = 0) -> Trajectory:
    """Run ``steps`` random branch applications from ``rho0``.

    ``states`` has ``steps + 1`` entries; ``probs[t]`` are the branch
    probabilities at ``states[t]``.
    """
    if steps < 1:
        raise ValidationError("steps must be at least 1")
    rho = density_matrix(rho0)
    if rho.shape[0] != m.dim:
        raise ValidationError(f"start state has dimension {rho.shape[0]}, model has {m.dim}")
    rng = stream(seed, stream_id)
    u = rng.random(steps)
    k, n = m.k, m.dim
    # each branch as a matrix on row-major vec(rho): vec(V rho V^*) = (V kron conj V) vec(rho)
    supers = np.stack([np.kron(v, v.conj()) for v in m.V.ops])
    diag_idx = np.arange(n) * (n + 1)
    transpose_idx = np.arange(n * n).reshape(n, n).T.ravel()
    rows = m._prob_rows
    floor = m.tol.branch_floor
    states = np.empty((steps + 1, n * n), dtype=complex)
    probs = np.empty((steps, k))
    branches = np.empty(steps, dtype=np.int64)
    x = rho.ravel()
    states[0] = x
    for t in range(steps):
        p = (rows @ x).real
        np.maximum(p, 0.0, out=p)
        probs[t] = p
        cum = p.cumsum()
        i = int((cum <= u[t] * cum[-1]).sum())
        if i >= k:
            i = k - 1
        y = supers[i] @ x
        tr = y[diag_idx].sum().real
        if tr <= floor:
            raise DegenerateBranch(i, tr, p[i])
        x = y / tr
        x = 0.5 * (x + x[transpose_idx].conj())
        states[t + 1] = x
        branches[t] = i
    states = states.reshape(steps + 1, n, n)
    return Trajectory(states=states, branches=branches, probs=probs, seed=seed, stream_id=stream_id)


def batch_means(x: np.ndarray, batches: int = BATCHES):
    """Mean along axis 0 and its batch-means standard error."""
    x = np.asarray(x)
    size = len(x) // batches
    if size < 1:
        raise ValidationError(f"need at least {batches} samples for {batches} batches")
    used = x[: size * batches]
    means = used.reshape((batches, size) + x.shape[1:]).mean(axis=1)
    return x.mean(axis=0), means.std(axis=0, ddof=1) / np.sqrt(batches)


def _check_counts(burn_in, samples):
    if samples < 100:
        raise ValidationError("samples must be at least 100")
    if burn_in < 0:
        raise ValidationError("burn_in must be nonnegative")


def _post_burn_in(m, burn_in, samples, seed, rho0, stream_id):
    _check_counts(burn_in, samples)
    start = m.seed_state() if rho0 is None else rho0
    return sample_trajectory(m, start, burn_in + samples, seed, stream_id)


def barycenter_from(traj: Trajectory, burn_in: int, batches: int = BATCHES) -> Estimate:
    xs = traj.states[burn_in + 1 :]
    mean, err = batch_means(xs, batches)
    mean = hermitize(mean)
    mean = mean / np.trace(mean).real
    # entrywise stderr of the complex mean, combining real and imaginary parts
    _, err_re = batch_means(xs.real, batches)
    _, err_im = batch_means(xs.imag, batches)
    return Estimate(mean, np.sqrt(err_re**2 + err_im**2), len(xs))


def entropy_from(traj: Trajectory, burn_in: int, batches: int = BATCHES) -> Estimate:
    h = eta_array(traj.probs[burn_in:]).sum(axis=1)
    mean, err = batch_means(h, batches)
    return Estimate(float(mean), float(err), len(h))


def estimate_barycenter(
    m: QifsModel, burn_in: int = BURN_IN, samples: int = SAMPLES, seed: int = 0, rho0=None, stream_id: int = 0
) -> Estimate:
    """Post-burn-in average of the trajectory states, starting from ``rho0`` (default ``I/N``)."""
    return barycenter_from(_post_burn_in(m, burn_in, samples, seed, rho0, stream_id), burn_in)


def estimate_entropy_integral(
    m: QifsModel, burn_in: int = BURN_IN, samples: int = SAMPLES, seed: int = 0, rho0=None, stream_id: int = 0
) -> Estimate:
    """Post-burn-in average of ``h(rho_t) = sum_i eta(p_i(rho_t))``."""
    return entropy_from(_post_burn_in(m, burn_in, samples, seed, rho0, stream_id), burn_in)


def estimate_both(
    m: QifsModel, burn_in: int = BURN_IN, samples: int = SAMPLES, seed: int = 0, rho0=None, stream_id: int = 0
) -> tuple[Estimate, Estimate]:
    """Barycenter and entropy integral from a single trajectory.

    Same results as the two separate estimators with identical arguments.
    """
    traj = _post_burn_in(m, burn_in, samples, seed, rho0, stream_id)
    return barycenter_from(traj, burn_in), entropy_from(traj, burn_in)


@dataclass
class MultiStartReport:
    barycenters: list
    entropies: list
    max_spread: float
    entropy_spread: float
    agree: bool


def multi_start(
    m: QifsModel, starts, burn_in: int = BURN_IN, samples: int = SAMPLES, seed: int = 0, sigmas: float = 3.0
) -> MultiStartReport:
    """Run one chain per start state and flag disagreement.

    Each start gets its own stream. Two chains disagree when their
    barycenters differ by more than ``sigmas`` combined standard errors, or
    their entropy integrals do.
    """
    bars, ents = [], []
    for sid, rho0 in enumerate(starts):
        b, e = estimate_both(m, burn_in, samples, seed, rho0, stream_id=sid)
        bars.append(b)
        ents.append(e)
    spread, espread, agree = 0.0, 0.0, True
    for a in range(len(bars)):
        for b in range(a + 1, len(bars)):
            d = hs_distance(bars[a].value, bars[b].value)
            de = abs(ents[a].value - ents[b].value)
            spread, espread = max(spread, d), max(espread, de)
            tol_b = sigmas * np.hypot(bars[a].stderr_norm, bars[b].stderr_norm)
            tol_e = sigmas * np.hypot(ents[a].stderr, ents[b].stderr)
            if d > tol_b + 1e-12 or de > tol_e + 1e-12:
                agree = False
    return MultiStartReport(bars, ents, spread, espread, agree)


def empirical_contraction(m: QifsModel, pairs: int = 100, seed: int = 0) -> np.ndarray:
    """Per-branch max of ``D_1(F_i(rho), F_i(sigma)) / D_1(rho, sigma)`` over random pairs.

    A diagnostic: ratios below 1 on samples suggest, but do not prove, that a
    branch contracts. Pairs on which a branch is degenerate are skipped.
    """
    if pairs < 10:
        raise ValidationError("pairs must be at least 10")
    rng = stream(seed, 0)
    ratios = np.zeros(m.k)
    floor = m.tol.branch_floor
    for _ in range(pairs):
        rho, sigma = random_density(rng, m.dim), random_density(rng, m.dim)
        d = hs_distance(rho, sigma)
        if d == 0:
            continue
        for i, v in enumerate(m.V.ops):
            a, b = v @ rho @ v.conj().T, v @ sigma @ v.conj().T
            ta, tb = np.trace(a).real, np.trace(b).real
            if ta <= floor or tb <= floor:
                continue
            ratios[i] = max(ratios[i], hs_distance(a / ta, b / tb) / d)
    return ratios
