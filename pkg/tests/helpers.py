"""Seeded instance families shared by the unit tests and the acceptance suite."""

from pathlib import Path

import numpy as np

from arrayobs.generate import random_array, random_psd_graph

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

SWEEP_SEED = 2024
STRADDLE_SEED = 7777
GRAPH_SEED = 31
GRAM_SEED = 99


def sweep_instances(count=200, seed=SWEEP_SEED):
    """Random arrays: n in {2,3,4}, q in 2..5, density in {0.3,0.6,1.0}, real and complex alternating."""
    rng = np.random.default_rng(seed)
    for idx in range(count):
        n = int(rng.choice([2, 3, 4]))
        q = int(rng.integers(2, 6))
        density = float(rng.choice([0.3, 0.6, 1.0]))
        yield idx, random_array(rng, n, q, density, complex_=bool(idx % 2))


def straddle_instances(count=100, seed=STRADDLE_SEED):
    """Random arrays whose eigenvalues sit at least 0.2 away from the imaginary axis, on both sides."""
    rng = np.random.default_rng(seed)
    for idx in range(count):
        n = int(rng.choice([2, 3, 4]))
        q = int(rng.integers(2, 6))
        density = float(rng.choice([0.3, 0.6, 1.0]))
        yield idx, random_array(rng, n, q, density, complex_=bool(idx % 2), straddle=True)


def psd_graphs(count=200, seed=GRAPH_SEED):
    rng = np.random.default_rng(seed)
    for idx in range(count):
        q = int(rng.integers(2, 7))
        n = int(rng.integers(1, 4))
        yield idx, random_psd_graph(rng, q, n, density=float(rng.choice([0.4, 0.7, 1.0])), complex_=bool(idx % 2))


def union_find_components(q, edges):
    parent = list(range(q + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        parent[find(i)] = find(j)
    return len({find(v) for v in range(1, q + 1)})


def span_equal(X, Y, atol=1e-10):
    """Column spans of X and Y coincide."""
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    if np.linalg.matrix_rank(X) != np.linalg.matrix_rank(Y):
        return False
    Qx, _ = np.linalg.qr(X)
    return np.linalg.norm(Y - Qx @ (Qx.conj().T @ Y)) <= atol * max(1.0, np.linalg.norm(Y))


# acceptance outcomes, printed by conftest at the end of the run
ACCEPTANCE_RESULTS = {}
