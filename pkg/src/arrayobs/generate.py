"""Seeded random arrays and n-graphs.

Couplings are built to hide chosen eigenvectors of A (``C_ij v = 0``), so
that individual pairs are unobservable in structured ways and eigengraphs
lose edges, which is where the interesting verdicts live.
"""

from __future__ import annotations

import numpy as np

from .array_model import ArraySystem
from .ngraph import NGraph, make_ngraph


def _real_block_spectrum(rng, n, lo=-1.5, hi=1.5, re_sampler=None):
    """Real block-diagonal matrix with eigenvalues drawn as reals and conjugate pairs.

    Returns the matrix and the list of column groups spanning each real
    invariant subspace (1 column for a real eigenvalue, 2 for a pair).
    """
    re_sampler = re_sampler or (lambda: rng.uniform(lo, hi))
    D = np.zeros((n, n))
    groups = []
    c = 0
    while c < n:
        if c + 1 < n and rng.random() < 0.5:
            a, b = re_sampler(), rng.uniform(0.3, 2.0)
            D[c:c + 2, c:c + 2] = [[a, b], [-b, a]]
            groups.append([c, c + 1])
            c += 2
        else:
            D[c, c] = re_sampler()
            groups.append([c])
            c += 1
    return D, groups


def _repeat_one(rng, D, groups):
    """Make two real 1x1 blocks share an eigenvalue (semisimple repeat)."""
    singles = [g[0] for g in groups if len(g) == 1]
    if len(singles) >= 2:
        a, b = rng.choice(singles, size=2, replace=False)
        D[b, b] = D[a, a]
    return D


def _similarity(rng, n, dtype):
    if rng.random() < 0.5:
        X = rng.standard_normal((n, n))
        if dtype is complex:
            X = X + 1j * rng.standard_normal((n, n))
        Q, _ = np.linalg.qr(X)
        return Q
    while True:
        T = np.eye(n) + 0.5 * rng.standard_normal((n, n))
        if dtype is complex:
            T = T + 0.5j * rng.standard_normal((n, n))
        if np.linalg.cond(T) < 50:
            return T


def _annihilating_coupling(rng, n, hidden_cols, complex_):
    m = int(rng.integers(1, n + 1))
    R = rng.standard_normal((m, n))
    if complex_:
        R = R + 1j * rng.standard_normal((m, n))
    if hidden_cols.shape[1]:
        P = np.eye(n) - hidden_cols @ np.linalg.pinv(hidden_cols)
        R = R @ P
    return R


def random_array(
    rng: np.random.Generator,
    n: int,
    q: int,
    density: float = 0.6,
    complex_: bool = False,
    straddle: bool = False,
    hide_prob: float = 0.4,
) -> ArraySystem:
    """Random array with couplings that hide random invariant subspaces of A.

    ``straddle`` places every eigenvalue at distance >= 0.2 from the
    imaginary axis on either side.
    """
    if straddle:
        def re_sampler():
            return rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 1.5)
    else:
        re_sampler = None
    if complex_:
        lam = rng.uniform(-1.5, 1.5, n) + 1j * rng.uniform(-1.5, 1.5, n)
        if straddle:
            lam = rng.choice([-1.0, 1.0], n) * rng.uniform(0.2, 1.5, n) + 1j * lam.imag
        if n >= 2 and rng.random() < 0.3:
            lam[1] = lam[0]
        D = np.diag(lam)
        groups = [[c] for c in range(n)]
        T = _similarity(rng, n, complex)
    else:
        D, groups = _real_block_spectrum(rng, n, re_sampler=re_sampler)
        if rng.random() < 0.3:
            D = _repeat_one(rng, D, groups)
        T = _similarity(rng, n, float)
    A = T @ D @ np.linalg.inv(T)

    couplings = {}
    for i in range(1, q + 1):
        for j in range(i + 1, q + 1):
            if rng.random() >= density:
                continue
            hidden = [g for g in groups if rng.random() < hide_prob]
            cols = [c for g in hidden for c in g]
            if len(cols) == n:
                # hiding everything leaves a rounding-noise coupling
                continue
            hidden_cols = T[:, cols] if cols else np.zeros((n, 0))
            couplings[(i, j)] = _annihilating_coupling(rng, n, hidden_cols, complex_)
    return ArraySystem(A, q, couplings)


def random_psd_graph(rng: np.random.Generator, q: int, n: int, density: float = 0.7, complex_: bool = True) -> NGraph:
    """Random n-graph whose weights are PSD with random (possibly deficient) rank."""
    weights = {}
    for i in range(1, q + 1):
        for j in range(i + 1, q + 1):
            if rng.random() >= density:
                continue
            r = int(rng.integers(1, n + 1))
            H = rng.standard_normal((r, n))
            if complex_:
                H = H + 1j * rng.standard_normal((r, n))
            G = H.conj().T @ H
            weights[(i, j)] = 0.5 * (G + G.conj().T)
    return make_ngraph(weights, q, n)
