"""Independent reference computations used to check the library.

Nothing here imports the package: each oracle is a plain loop, a dense
eigensolver call or a closed form.
"""

import itertools
import math

import numpy as np

SQRT17 = math.sqrt(17.0)
WORKED_BETA = (5 + SQRT17) / 2
WORKED_RHO = ((3 + SQRT17) / (7 + SQRT17), 4 / (7 + SQRT17))
PERRON_A = [[1.0, 4.0], [3.0, 0.5]]
PERRON_BETA = 0.75 + math.sqrt(193.0) / 4


def unit(i, j, n=2, scale=1.0):
    e = np.zeros((n, n), dtype=complex)
    e[i, j] = scale
    return e


def worked_example_ops():
    """Elementary-unit dynamics and the rank-one potential of the worked example."""
    V = [unit(0, 0), unit(0, 1), unit(1, 0), unit(1, 1)]
    s = math.sqrt(2)
    H = [
        np.array([[2j, 2j], [0, 0]]),
        np.eye(2, dtype=complex),
        np.array([[1j * s, 1j * s], [0, 0]]),
        np.eye(2, dtype=complex),
    ]
    return V, H


def eta(x):
    return 0.0 if x == 0 else -x * math.log(x)


def lambda_loop(V, W, rho):
    out = np.zeros_like(rho, dtype=complex)
    for v, w in zip(V, W):
        p = np.trace(w @ rho @ w.conj().T).real
        img = v @ rho @ v.conj().T
        t = np.trace(img).real
        if p > 0:
            out += p * img / t
    return out


def fixed_point_loop(V, W, rho=None, iters=20000, tol=1e-14):
    n = V[0].shape[0]
    rho = np.eye(n, dtype=complex) / n if rho is None else rho
    for _ in range(iters):
        nxt = lambda_loop(V, W, rho)
        if np.max(np.abs(nxt - rho)) < tol:
            return nxt
        rho = nxt
    return rho


def qifs_entropy_loop(V, W, rho):
    total = 0.0
    for vi, wi in zip(V, W):
        p = np.trace(wi @ rho @ wi.conj().T).real
        img = vi @ rho @ vi.conj().T
        t = np.trace(img).real
        if p <= 0:
            continue
        for wj in W:
            a = np.trace(wj @ img @ wj.conj().T).real / t
            total += p * eta(max(a, 0.0))
    return total


def stationary_eig(P):
    vals, vecs = np.linalg.eig(np.asarray(P, dtype=float))
    v = np.real(vecs[:, np.argmin(np.abs(vals - 1))])
    return v / v.sum()


def stationary_2x2(P):
    p00, p01 = P[0][0], P[0][1]
    return np.array([p01 / (1 - p00 + p01), (1 - p00) / (1 - p00 + p01)])


def markov_entropy_loop(P):
    P = np.asarray(P, dtype=float)
    pi = stationary_eig(P)
    return sum(pi[j] * sum(eta(P[i, j]) for i in range(len(P))) for j in range(len(P)))


def perron_dense(A):
    vals, vecs = np.linalg.eig(np.asarray(A, dtype=float))
    i = int(np.argmax(vals.real))
    v = np.abs(np.real(vecs[:, i]))
    return float(vals[i].real), v / v.sum()


def words_loop(V, W, rho, n):
    """All words of length n with their probabilities and final states, by brute force."""
    out = []
    for word in itertools.product(range(len(V)), repeat=n):
        state, prob = rho, 1.0
        for i in word:
            p = np.trace(W[i] @ state @ W[i].conj().T).real
            img = V[i] @ state @ V[i].conj().T
            t = np.trace(img).real
            prob *= p
            if prob <= 1e-300 or t <= 1e-300:
                prob = 0.0
                break
            state = img / t
        out.append((word, prob, state))
    return out


def shannon_probs(W, rho):
    return sum(eta(max(np.trace(w @ rho @ w.conj().T).real, 0.0)) for w in W)


def vn_entropy_eig(rho):
    return sum(eta(max(x, 0.0)) for x in np.linalg.eigvalsh(rho))


def holevo_diag(probs, rows):
    """Holevo quantity of an ensemble of diagonal states given as probability rows."""
    rows = np.asarray(rows, dtype=float)
    avg = np.asarray(probs) @ rows
    return sum(eta(x) for x in avg) - sum(p * sum(eta(x) for x in r) for p, r in zip(probs, rows))


def classic_lhs_loop(A, Q):
    A, Q = np.asarray(A, dtype=float), np.asarray(Q, dtype=float)
    pi = stationary_eig(Q)
    k = len(Q)
    ent = sum(pi[j] * sum(eta(Q[i, j]) for i in range(k)) for j in range(k))
    pot = sum(pi[j] * sum(Q[i, j] * A[i, j] for i in range(k)) for j in range(k))
    return ent, pot
