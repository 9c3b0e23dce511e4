import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import PERRON_A, PERRON_BETA, markov_entropy_loop, perron_dense, stationary_2x2, stationary_eig

from qifs_thermo.errors import EmbeddingDegenerate, Reducible, ValidationError
from qifs_thermo.markov import (
    EmbeddingKind,
    elementary_kraus,
    embed_classic_bridge,
    embed_perron,
    embed_stochastic,
    family_weights,
    governing_matrix,
    is_irreducible,
    markov_power_identity,
    markov_power_limit,
    natural_weights,
    stationary_vector,
    stationary_vector_2x2,
    weighted_perron_operator,
)
from qifs_thermo.matcore import dominant_eigenpair
from qifs_thermo.rand import random_stochastic, stream
from qifs_thermo.solvers import (
    closed_form_2x2_diagonal,
    solve_lambda_fixed_point,
    solve_ruelle_eigen,
)
from qifs_thermo.thermo import qifs_entropy

seeds = st.integers(min_value=0, max_value=2**31 - 1)
KINDS = ["hom4", "nonhom4", "hom2", "nonhom2"]


def pair(seed):
    rng = stream(seed)
    return random_stochastic(rng, 2, floor=0.05), random_stochastic(rng, 2, floor=0.05)


def test_embedding_kind_arity():
    assert [k.arity for k in EmbeddingKind] == [4, 4, 2, 2, 2, 4]


def test_stationary_examples():
    P = np.array([[0.7, 0.2], [0.3, 0.8]])
    assert np.allclose(stationary_vector(P), stationary_2x2(P), atol=1e-15)
    assert np.allclose(stationary_vector_2x2(P), stationary_2x2(P), atol=1e-15)
    D = np.array([[0.2, 0.5, 0.3], [0.5, 0.2, 0.3], [0.3, 0.3, 0.4]])
    assert np.allclose(stationary_vector(D), 1 / 3, atol=1e-15)
    with pytest.raises(Reducible):
        stationary_vector(np.eye(2))
    assert not is_irreducible(np.eye(2))
    with pytest.raises(ValidationError):
        stationary_vector([[0.5, 0.5], [0.6, 0.5]])


@given(seeds, st.integers(min_value=2, max_value=5))
@settings(max_examples=60, deadline=None)
def test_stationary_residual(seed, n):
    P = random_stochastic(stream(seed), n, floor=1e-3)
    pi = stationary_vector(P)
    assert np.linalg.norm(P @ pi - pi) <= 1e-12
    assert np.all(pi >= 0) and pi.sum() == pytest.approx(1)
    assert np.allclose(pi, stationary_eig(P), atol=1e-10)


def test_hom4_fixed_point_is_stationary():
    P = np.array([[0.7, 0.2], [0.3, 0.8]])
    m = embed_stochastic(P, None, "hom4")
    rho, _, _ = solve_lambda_fixed_point(m)
    p00, p01 = P[0]
    expected = [p01 / (1 - p00 + p01), (1 - p00) / (1 - p00 + p01)]
    assert np.allclose(np.diag(rho).real, expected, atol=1e-11)
    assert abs(rho[0, 1]) <= 1e-10


def test_nonhom4_fixed_point_ignores_p():
    Q = np.array([[0.6, 0.3], [0.4, 0.7]])
    rhos = []
    for P in ([[0.7, 0.2], [0.3, 0.8]], [[0.1, 0.9], [0.9, 0.1]]):
        rhos.append(solve_lambda_fixed_point(embed_stochastic(P, Q, "nonhom4"))[0])
    assert np.allclose(rhos[0], rhos[1], atol=1e-11)
    assert np.allclose(np.diag(rhos[0]).real, [3 / 7, 4 / 7], atol=1e-11)


def test_hom2_off_diagonal_is_linear_in_diagonal():
    P = np.array([[0.7, 0.2], [0.3, 0.8]])
    rho, _, _ = solve_lambda_fixed_point(embed_stochastic(P, None, "hom2"))
    pi = stationary_2x2(P)
    off = pi[0] * math.sqrt(P[0, 0] * P[1, 0]) + pi[1] * math.sqrt(P[0, 1] * P[1, 1])
    assert np.allclose(np.diag(rho).real, pi, atol=1e-11)
    assert rho[0, 1].real == pytest.approx(off, abs=1e-11)


def test_embedding_validation():
    with pytest.raises(EmbeddingDegenerate):
        embed_stochastic([[1, 0.5], [0, 0.5]], None, "hom4")
    with pytest.raises(ValidationError):
        embed_stochastic([[0.5, 0.5], [0.5, 0.5]], None, "nonhom4")
    with pytest.raises(ValidationError):
        embed_stochastic([[0.5, 0.5], [0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]], "hom4")
    with pytest.raises(ValidationError):
        embed_stochastic([[0.5, 0.5], [0.5, 0.5]], None, "perron")
    with pytest.raises(EmbeddingDegenerate):
        embed_perron([[2, 0], [1, 1]])


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("kind", KINDS)
def test_embedding_entropy_equivalence(seed, kind):
    P, Q = pair(seed)
    m = embed_stochastic(P, None if kind.startswith("hom") else Q, kind)
    assert m.W.normalization_error() <= 1e-12
    rho, _, _ = solve_lambda_fixed_point(m)
    gov = governing_matrix(P, Q, kind)
    assert abs(qifs_entropy(m, rho) - markov_entropy_loop(gov)) <= 1e-10
    if kind.endswith("4"):
        assert np.allclose(np.diag(rho).real, stationary_2x2(gov), atol=1e-10)
        assert abs(rho[0, 1]) <= 1e-10


def test_perron_embedding_examples():
    V, H = embed_perron(PERRON_A)
    r = solve_ruelle_eigen(H, V)
    assert r.beta == pytest.approx(PERRON_BETA, abs=1e-9)
    v = np.diag(r.rho_beta).real
    assert np.linalg.norm(np.array(PERRON_A) @ v - r.beta * v) <= 1e-9


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_perron_embedding_random(seed):
    A = stream(seed).uniform(0.1, 5.0, (2, 2))
    V, H = embed_perron(A)
    r = solve_ruelle_eigen(H, V)
    lam, _ = dominant_eigenpair(A)
    assert abs(r.beta - lam) <= 1e-9
    v = np.diag(r.rho_beta).real
    assert np.linalg.norm(A @ v - r.beta * v) <= 1e-9
    assert np.allclose(v, perron_dense(A)[1], atol=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_classic_bridge_structure(seed):
    rng = stream(seed)
    A = rng.uniform(-1, 1, (2, 2))
    Q = random_stochastic(rng, 2, floor=0.05)
    m, H = embed_classic_bridge(A, Q)
    assert m.W.normalization_error() <= 1e-12
    r = solve_ruelle_eigen(H, m.V)
    rho, _, _ = solve_lambda_fixed_point(m)
    assert abs(r.rho_beta[0, 1]) <= 1e-10 and abs(rho[0, 1]) <= 1e-10
    traces = [np.trace(h @ r.rho_beta @ h.conj().T).real for h in H.ops]
    assert np.allclose(traces, np.exp(A).ravel(), atol=1e-10)


def test_classic_bridge_zero_potential():
    m, H = embed_classic_bridge(np.zeros((2, 2)), np.full((2, 2), 0.5))
    r = solve_ruelle_eigen(H, m.V)
    assert r.beta == pytest.approx(2.0, abs=1e-12)


def test_elementary_kraus_is_normalized():
    P = random_stochastic(stream(1), 4, floor=0.01)
    V = elementary_kraus(P)
    assert V.k == 16 and V.normalization_error() <= 1e-12


def test_power_identity_examples():
    P = np.array([[0.7, 0.2], [0.3, 0.8]])
    assert markov_power_identity(P, 1) == 0.0
    assert markov_power_identity(P, 6) <= 1e-12
    assert markov_power_limit(P, 50) <= 1e-8
    with pytest.raises(ValueError):
        markov_power_identity(P, 0)


def test_natural_weights_fix_stationary_state():
    P = np.array([[0.7, 0.2], [0.3, 0.8]])
    q = natural_weights(P)
    assert np.allclose(q, 1 / P.ravel())


@pytest.mark.parametrize("seed", range(20))
def test_weight_family_reproduces_stationary_state(seed):
    rng = stream(seed)
    P = random_stochastic(rng, 2, floor=0.05)
    q1 = rng.uniform(0.05, 0.95) / P[0, 0] ** 2
    q3 = rng.uniform(0.05, 0.95) / (P[1, 0] * P[0, 1])
    w = family_weights(P, q1, q3)
    assert np.all(w > 0)
    V, H = weighted_perron_operator(P, w)
    r = solve_ruelle_eigen(H, V)
    pi = stationary_2x2(P)
    assert r.beta == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(np.diag(r.rho_beta).real, pi, atol=1e-9)
    # same eigenproblem through the closed form: rows act as [[a, b], [c, d]] on diag(rho)
    cf = closed_form_2x2_diagonal(w[0] * P[0, 0] ** 2, w[1] * P[0, 1] ** 2, w[2] * P[1, 0] ** 2, w[3] * P[1, 1] ** 2)
    assert cf.lambda_plus == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(np.diag(cf.rho_plus).real, pi, atol=1e-12)


def test_power_limit_decays_at_second_eigenvalue_rate():
    # aperiodic but slowly mixing: n = 50 is far from the limit, n = 1000 is not
    P = np.array([[0.98, 0.01], [0.02, 0.99]])
    lam2 = sorted(np.abs(np.linalg.eigvals(P)))[-2]
    d50, d100 = markov_power_limit(P, 50), markov_power_limit(P, 100)
    assert d50 > 1e-2
    assert d100 / d50 == pytest.approx(lam2**50, rel=1e-6)
    assert markov_power_limit(P, 1000) <= 1e-8
