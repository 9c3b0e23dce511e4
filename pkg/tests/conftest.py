import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import worked_example_ops  # noqa: E402

from qifs_thermo.qifs import KrausFamily, QifsModel  # noqa: E402
from qifs_thermo.rand import ginibre, random_isometry_blocks, stream  # noqa: E402

CONFIG_DIR = Path(__file__).resolve().parent.parent / "docs" / "configs"


@pytest.fixture
def worked_example():
    V, H = worked_example_ops()
    return KrausFamily.of(V), KrausFamily.of(H)


@pytest.fixture
def delta_model():
    """Two-branch model whose branches both fix diag(1/3, 2/3)."""
    V = KrausFamily.of([np.diag([-1.0, 1.0]), [[0, -3 * math.sqrt(2) / 4], [-3 * math.sqrt(2) / 2, 0]]])
    W = KrausFamily.of([0.5 * np.eye(2), math.sqrt(3) / 2 * np.eye(2)])
    return QifsModel(V, W)


def random_model(rng, k=3, n=2):
    V = KrausFamily(np.stack([ginibre(rng, n) for _ in range(k)]))
    W = KrausFamily(random_isometry_blocks(rng, k, n))
    return QifsModel(V, W)


def rank_one_model(rng, k=3, n=2):
    """Branches ``V_i = |psi_i><phi_i|`` send every state to a fixed pure state."""
    ops = []
    for _ in range(k):
        psi = ginibre(rng, n, 1).ravel()
        phi = ginibre(rng, n, 1).ravel()
        ops.append(np.outer(psi / np.linalg.norm(psi), phi.conj() / np.linalg.norm(phi)))
    return QifsModel(KrausFamily(np.stack(ops)), KrausFamily(random_isometry_blocks(rng, k, n)))


def homogeneous_model(rng, k=3, n=2):
    V = KrausFamily(random_isometry_blocks(rng, k, n))
    return QifsModel(V, V)


@pytest.fixture
def rng():
    return stream(12345, 0)
