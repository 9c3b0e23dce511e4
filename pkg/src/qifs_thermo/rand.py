"""Seeded random generators for states, unitaries, Kraus families and chains.

Every generator takes a :class:`numpy.random.Generator`. :func:`stream`
builds a counter-based Philox generator keyed by ``(seed, stream_id)`` so
parallel sweeps can give each sample its own independent, reproducible stream.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.Philox(ss))


def ginibre(rng, rows: int, cols: int | None = None) -> np.ndarray:
    cols = rows if cols is None else cols
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_density(rng, n: int, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt (or induced, if ``rank`` is given) random density matrix."""
    g = ginibre(rng, n, n if rank is None else rank)
    r = g @ g.conj().T
    r = 0.5 * (r + r.conj().T)
    return r / np.trace(r).real


def random_pure(rng, n: int) -> np.ndarray:
    v = ginibre(rng, n, 1).ravel()
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_unitary(rng, n: int) -> np.ndarray:
    """Haar unitary via QR with phase correction."""
    q, r = np.linalg.qr(ginibre(rng, n))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_isometry_blocks(rng, k: int, n: int) -> np.ndarray:
    """``k`` blocks ``W_i`` of size ``n x n`` with ``sum W_i^* W_i = I``.

    A ``kn x n`` Gaussian matrix is orthonormalized column-wise and cut into
    ``k`` row blocks.
    """
    q, r = np.linalg.qr(ginibre(rng, k * n, n))
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return q.reshape(k, n, n)


def random_stochastic(rng, n: int, low: float = 0.0, high: float = 1.0, floor: float = 0.0) -> np.ndarray:
    """Column-stochastic ``n x n`` matrix.

    Entries are drawn uniformly on ``[low, high]`` and each column is then
    normalized. With ``floor > 0`` the result is redrawn until every entry is
    at least ``floor``.
    """
    while True:
        m = rng.uniform(low, high, size=(n, n))
        m = m / m.sum(axis=0, keepdims=True)
        if np.all(m >= floor):
            return m
