import math

import numpy as np
import pytest
from conftest import rank_one_model
from oracles import markov_entropy_loop, stationary_2x2

from qifs_thermo.errors import DegenerateBranch, ValidationError
from qifs_thermo.markov import embed_stochastic
from qifs_thermo.matcore import maximally_mixed, pure_state
from qifs_thermo.qifs import KrausFamily, QifsModel, shannon_observable
from qifs_thermo.rand import ginibre, random_density, random_unitary, stream
from qifs_thermo.sim import (
    batch_means,
    empirical_contraction,
    estimate_barycenter,
    estimate_both,
    estimate_entropy_integral,
    multi_start,
    sample_trajectory,
)
from qifs_thermo.solvers import solve_lambda_fixed_point
from qifs_thermo.thermo import qifs_entropy

RHO0 = np.diag([1 / 3, 2 / 3]).astype(complex)


def test_delta_model_trajectory_is_constant(delta_model):
    traj = sample_trajectory(delta_model, RHO0, 500, seed=1)
    assert len(traj) == 500 and traj.states.shape == (501, 2, 2)
    assert np.max(np.abs(traj.states - RHO0)) <= 1e-14
    assert set(traj.branches.tolist()) == {0, 1}


def test_identity_model_trajectory_is_constant():
    m = QifsModel(KrausFamily.of([np.eye(2)]), KrausFamily.of([np.eye(2)]))
    rho = random_density(stream(2), 2)
    traj = sample_trajectory(m, rho, 100, seed=0)
    assert np.allclose(traj.states, rho, atol=1e-15)


def test_trajectory_follows_branch_maps():
    m = rank_one_model(stream(3))
    traj = sample_trajectory(m, maximally_mixed(2), 50, seed=4)
    for t in range(50):
        v = m.V.ops[traj.branches[t]]
        y = v @ traj.states[t] @ v.conj().T
        assert np.allclose(traj.states[t + 1], y / np.trace(y), atol=1e-12)
        assert traj.probs[t].sum() == pytest.approx(1, abs=1e-12)


def test_trajectory_is_deterministic():
    m = rank_one_model(stream(5))
    a = sample_trajectory(m, maximally_mixed(2), 1000, seed=9, stream_id=2)
    b = sample_trajectory(m, maximally_mixed(2), 1000, seed=9, stream_id=2)
    c = sample_trajectory(m, maximally_mixed(2), 1000, seed=9, stream_id=3)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.branches, b.branches)
    assert not np.array_equal(a.branches, c.branches)
    e1 = estimate_both(m, 100, 1000, seed=9)
    e2 = estimate_both(m, 100, 1000, seed=9)
    assert np.array_equal(e1[0].value, e2[0].value) and e1[1].value == e2[1].value


def test_trajectory_validation():
    m = rank_one_model(stream(6))
    with pytest.raises(ValidationError):
        sample_trajectory(m, maximally_mixed(2), 0, seed=0)
    with pytest.raises(ValidationError):
        sample_trajectory(m, maximally_mixed(3), 10, seed=0)
    with pytest.raises(ValidationError):
        estimate_barycenter(m, 10, 50, seed=0)
    with pytest.raises(ValidationError):
        estimate_barycenter(m, -1, 500, seed=0)


def test_degenerate_draw_raises():
    # branch 1 annihilates |0> but still has weight 1/2 there
    V = KrausFamily.of([np.eye(2), np.diag([0.0, 1.0])])
    m = QifsModel(V, KrausFamily.of([np.eye(2) / math.sqrt(2)] * 2))
    with pytest.raises(DegenerateBranch):
        sample_trajectory(m, pure_state([1, 0]), 200, seed=0)


def test_batch_means_examples():
    mean, err = batch_means(np.full(1000, 2.5))
    assert mean == 2.5 and err == 0
    with pytest.raises(ValidationError):
        batch_means(np.ones(10))


def test_delta_model_estimates(delta_model):
    bar, ent = estimate_both(delta_model, 10, 1000, seed=0, rho0=RHO0)
    assert np.max(np.abs(bar.value - RHO0)) <= 1e-14
    assert ent.value == pytest.approx(shannon_observable(delta_model)(RHO0), abs=1e-14)
    assert ent.stderr <= 1e-15


def test_uniform_probabilities_give_log_k():
    rng = stream(7)
    V = KrausFamily(np.stack([ginibre(rng, 2) for _ in range(3)]))
    m = QifsModel(V, KrausFamily.of([np.eye(2) / math.sqrt(3)] * 3))
    est = estimate_entropy_integral(m, 100, 2000, seed=1)
    assert est.value == pytest.approx(math.log(3), abs=1e-12)
    assert est.stderr <= 1e-12


def test_separate_estimators_match_combined():
    m = rank_one_model(stream(8))
    bar, ent = estimate_both(m, 50, 500, seed=3)
    assert np.array_equal(estimate_barycenter(m, 50, 500, seed=3).value, bar.value)
    assert estimate_entropy_integral(m, 50, 500, seed=3).value == ent.value


def test_hom4_barycenter_matches_stationary_vector():
    P = np.array([[0.7, 0.2], [0.3, 0.8]])
    bar = estimate_barycenter(embed_stochastic(P, None, "hom4"), seed=11)
    pi = stationary_2x2(P)
    assert np.all(np.abs(np.diag(bar.value).real - pi) <= 3 * np.diag(bar.stderr))
    assert abs(bar.value[0, 1]) <= 1e-12


def test_nonhom4_entropy_integral_matches_markov_entropy():
    Q = np.array([[0.6, 0.3], [0.4, 0.7]])
    est = estimate_entropy_integral(embed_stochastic(np.full((2, 2), 0.5), Q, "nonhom4"), seed=12)
    assert abs(est.value - markov_entropy_loop(Q)) <= 3 * est.stderr


@pytest.mark.parametrize("seed", range(3))
def test_estimates_match_solver_on_rank_one_models(seed):
    m = rank_one_model(stream(300 + seed))
    rho, _, _ = solve_lambda_fixed_point(m)
    bar, ent = estimate_both(m, seed=seed)
    assert np.all(np.abs(bar.value - rho) <= 3 * bar.stderr + 1e-12)
    assert abs(ent.value - qifs_entropy(m, rho)) <= 3 * ent.stderr


def test_contraction_examples(delta_model):
    rng = stream(13)
    m = QifsModel(KrausFamily.of([random_unitary(rng, 2) for _ in range(2)]), KrausFamily.of([np.eye(2) / math.sqrt(2)] * 2))
    assert np.allclose(empirical_contraction(m, 50, seed=1), 1.0, atol=1e-12)
    assert np.all(empirical_contraction(rank_one_model(rng), 50, seed=1) <= 1e-12)
    ratios = empirical_contraction(delta_model, 50, seed=1)
    assert ratios.shape == (2,) and np.all(ratios > 0)
    with pytest.raises(ValidationError):
        empirical_contraction(m, 5)


def test_multi_start_agrees_on_attractive_model():
    m = rank_one_model(stream(14))
    starts = [maximally_mixed(2), pure_state([1, 0]), pure_state([0, 1])]
    rep = multi_start(m, starts, burn_in=100, samples=5000, seed=2)
    assert rep.agree and len(rep.barycenters) == 3


def test_multi_start_flags_disagreement():
    # two invariant pure states that never mix
    V = KrausFamily.of([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    W = KrausFamily.of([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    rep = multi_start(QifsModel(V, W), [pure_state([1, 0]), pure_state([0, 1])], burn_in=10, samples=200)
    assert not rep.agree
    assert rep.max_spread == pytest.approx(math.sqrt(2))
