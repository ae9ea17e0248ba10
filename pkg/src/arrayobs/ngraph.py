"""Matrix-weighted graphs (n-graphs), their Laplacians, and effective conductance.

An n-graph on q vertices assigns each unordered vertex pair a Hermitian
positive semidefinite n-by-n weight. Connectivity is defined spectrally:
the graph is connected when the (n+1)-th smallest Laplacian eigenvalue is
positive, equivalently when the Laplacian null space is exactly the
synchronization subspace ``{1_q (x) v}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .array_model import Pair, canonical_pair
from .numerics import (
    DEFAULT_TOL,
    NumericalError,
    Tolerance,
    ValidationError,
    as_cmatrix,
    hermitian_eig,
    pseudo_inverse,
)


@dataclass(frozen=True)
class NGraph:
    """``scale`` is a reference weight magnitude used to recognise a graph
    whose weights have all cancelled to rounding noise; 0 means "use the
    weights themselves"."""

    q: int
    n: int
    weights: Mapping[Pair, np.ndarray]
    scale: float = 0.0

    def weight(self, i: int, j: int) -> np.ndarray:
        if i == j:
            return np.zeros((self.n, self.n), dtype=np.complex128)
        G = self.weights.get(canonical_pair(i, j))
        return np.zeros((self.n, self.n), dtype=np.complex128) if G is None else G


def make_ngraph(weights: Mapping[Pair, object], q: int, n: int, tol: Tolerance = DEFAULT_TOL) -> NGraph:
    """Validate Hermitian PSD weights and build an :class:`NGraph`."""
    if q < 1 or n < 1:
        raise ValidationError(f"n-graph needs q >= 1 and n >= 1, got q={q}, n={n}")
    checked = {}
    for (i, j), G in weights.items():
        if i == j:
            raise ValidationError(f"weight ({i},{j}): self-weights are not allowed")
        if not (1 <= i <= q and 1 <= j <= q):
            raise ValidationError(f"weight ({i},{j}): vertex outside 1..{q}")
        G = as_cmatrix(G, f"G_{i}{j}").copy()
        if G.shape != (n, n):
            raise ValidationError(f"G_{i}{j}: expected shape {(n, n)}, got {G.shape}")
        scale = np.linalg.norm(G, 2)
        if np.linalg.norm(G - G.conj().T, 2) > tol.psd_slack * scale:
            raise ValidationError(f"G_{i}{j}: weight is not Hermitian")
        if scale > 0 and np.linalg.eigvalsh(G)[0] < -tol.psd_slack * scale:
            raise ValidationError(f"G_{i}{j}: weight is not positive semidefinite")
        pair = canonical_pair(i, j)
        if pair in checked:
            raise ValidationError(f"weight ({i},{j}) given twice")
        G.setflags(write=False)
        checked[pair] = G
    return NGraph(q, n, MappingProxyType(checked))


def graph_from_matrices(H: Mapping[Pair, object], q: int, n: int, scale: float = 0.0) -> NGraph:
    """The n-graph with weights ``G_ij = H_ij^* H_ij``.

    Pass ``scale`` when the H_ij are products (say ``C_ij V``) that may
    cancel; it should bound the weight norms before cancellation.
    """
    weights = {}
    for (i, j), Hij in H.items():
        Hij = as_cmatrix(Hij, f"H_{i}{j}")
        if Hij.shape[1] != n:
            raise ValidationError(f"H_{i}{j}: expected {n} columns, got {Hij.shape[1]}")
        if i == j:
            raise ValidationError(f"H_{i}{j}: self-weights are not allowed")
        if not (1 <= i <= q and 1 <= j <= q):
            raise ValidationError(f"H_{i}{j}: vertex outside 1..{q}")
        G = Hij.conj().T @ Hij
        G = 0.5 * (G + G.conj().T)
        G.setflags(write=False)
        weights[canonical_pair(i, j)] = G
    return NGraph(q, n, MappingProxyType(weights), float(scale))


@dataclass(frozen=True)
class LaplacianView:
    L: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    null_basis: np.ndarray
    threshold: float


def laplacian_matrix(g: NGraph) -> np.ndarray:
    """Block Laplacian: ``sum_j G_ij`` on the diagonal, ``-G_ij`` off it."""
    n, q = g.n, g.q
    L = np.zeros((n * q, n * q), dtype=np.complex128)
    for (i, j), G in g.weights.items():
        a, b = (i - 1) * n, (j - 1) * n
        L[a:a + n, a:a + n] += G
        L[b:b + n, b:b + n] += G
        L[a:a + n, b:b + n] -= G
        L[b:b + n, a:a + n] -= G
    return L


def zero_threshold(eigenvalues: np.ndarray, tol: Tolerance, scale: float = 0.0) -> float:
    """Eigenvalues at or below this count as zero.

    Scales with the largest eigenvalue (or the graph's reference scale, if
    larger) so verdicts are invariant under a uniform rescaling of all
    weights.
    """
    if eigenvalues.size == 0:
        return 0.0
    lam_max = max(float(eigenvalues[-1]), 0.0, float(scale))
    return tol.rank_rtol * lam_max * eigenvalues.size


def laplacian(g: NGraph, tol: Tolerance = DEFAULT_TOL) -> LaplacianView:
    L = laplacian_matrix(g)
    w, Q = hermitian_eig(L, tol)
    thr = zero_threshold(w, tol, g.scale)
    null_basis = Q[:, w <= thr]
    for arr in (L, w, Q, null_basis):
        arr.setflags(write=False)
    return LaplacianView(L, w, Q, null_basis, thr)


def sync_basis(q: int, n: int) -> np.ndarray:
    """Orthonormal basis of the synchronization subspace ``1_q (x) I_n / sqrt(q)``."""
    return np.kron(np.ones((q, 1)), np.eye(n)).astype(np.complex128) / np.sqrt(q)


def difference_operator(q: int, n: int, k: int, l: int) -> np.ndarray:
    """``(e_k - e_l) (x) I_n``, shape ``(nq, n)``."""
    e = np.zeros((q, 1))
    e[k - 1, 0] = 1.0
    e[l - 1, 0] = -1.0
    return np.kron(e, np.eye(n)).astype(np.complex128)


@dataclass(frozen=True)
class Connectivity:
    """A connectivity verdict; ``witness`` is a Laplacian null vector certifying a negative one."""

    connected: bool
    witness: np.ndarray | None = None
    lambda_next: float | None = None
    threshold: float | None = None

    def __bool__(self):
        return self.connected


def _top_direction(M: np.ndarray) -> tuple[np.ndarray, float]:
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    return U[:, 0], float(s[0])


def is_connected(g: NGraph, tol: Tolerance = DEFAULT_TOL, view: LaplacianView | None = None) -> Connectivity:
    """``lambda_{n+1}(L) > threshold``; on failure, a null vector outside the sync subspace."""
    view = laplacian(g, tol) if view is None else view
    n, q = g.n, g.q
    if q == 1:
        return Connectivity(True, None, None, view.threshold)
    lam = float(view.eigenvalues[n])
    if lam > view.threshold:
        return Connectivity(True, None, lam, view.threshold)
    N = view.null_basis
    S = sync_basis(q, n)
    off_sync = N - S @ (S.conj().T @ N)
    witness, _ = _top_direction(off_sync)
    witness = _normalize_phase(witness)
    return Connectivity(False, witness, lam, view.threshold)


def is_pair_connected(
    g: NGraph, k: int, l: int, tol: Tolerance = DEFAULT_TOL, view: LaplacianView | None = None
) -> Connectivity:
    """Whether every Laplacian null vector has equal k-th and l-th blocks."""
    _check_pair(g.q, k, l)
    view = laplacian(g, tol) if view is None else view
    N = view.null_basis
    D = difference_operator(g.q, g.n, k, l)
    proj = N.conj().T @ D
    if proj.size == 0:
        return Connectivity(True, None, None, view.threshold)
    u, s = _top_direction(proj)
    # columns of D have norm sqrt(2)
    if s <= tol.subspace_atol * np.sqrt(2.0):
        return Connectivity(True, None, None, view.threshold)
    witness = _normalize_phase(N @ u)
    return Connectivity(False, witness, None, view.threshold)


def _normalize_phase(v: np.ndarray) -> np.ndarray:
    """Fix the arbitrary unit phase so the largest entry is real positive."""
    v = np.asarray(v, dtype=np.complex128)
    idx = int(np.argmax(np.abs(v)))
    if abs(v[idx]) == 0:
        return v
    return v * (abs(v[idx]) / v[idx])


def _check_pair(q, k, l):
    if k == l:
        raise ValidationError(f"pair ({k},{l}): vertices must be distinct")
    for v in (k, l):
        if not isinstance(v, (int, np.integer)) or not 1 <= v <= q:
            raise ValidationError(f"pair ({k},{l}): vertex {v!r} outside 1..{q}")


@dataclass(frozen=True)
class EffectiveConductance:
    k: int
    l: int
    gamma: np.ndarray
    potentials: tuple
    residual: float

    def stacked_potentials(self) -> np.ndarray:
        return np.vstack(self.potentials)


def _blocks(n, idx):
    return np.concatenate([np.arange((i - 1) * n, i * n) for i in idx]) if idx else np.zeros(0, int)


def _component(g: NGraph, k: int) -> set[int]:
    """Vertices joined to k by a chain of nonzero weights."""
    adjacent = {i: set() for i in range(1, g.q + 1)}
    for (i, j), G in g.weights.items():
        if np.any(G):
            adjacent[i].add(j)
            adjacent[j].add(i)
    seen, stack = {k}, [k]
    while stack:
        for j in adjacent[stack.pop()] - seen:
            seen.add(j)
            stack.append(j)
    return seen


def effective_conductance(
    g: NGraph, k: int, l: int, tol: Tolerance = DEFAULT_TOL
) -> EffectiveConductance:
    """Matrix-valued effective conductance between vertices k and l.

    Solves ``L X = (e_k - e_l) (x) Gamma`` with ``X_k = I`` and ``X_l = 0``
    through the Schur complement of the interior block, using the
    pseudo-inverse since that block may be singular. Only the connected
    component of k takes part; gamma is exactly zero when l lies outside it.
    """
    _check_pair(g.q, k, l)
    if g.q < 2:
        raise ValidationError("effective conductance needs at least two vertices")
    n, q = g.n, g.q
    L = laplacian_matrix(g)
    eye = np.eye(n, dtype=np.complex128)
    zero = np.zeros((n, n), dtype=np.complex128)
    # vertices outside the component of k carry no current; leaving them out
    # keeps their rounding noise out of gamma, which is exactly zero when l
    # lies in another component
    component = _component(g, k)
    X = [eye if i in component else zero for i in range(1, q + 1)]
    X[l - 1] = zero
    interior = [i for i in sorted(component) if i not in (k, l)]

    if l not in component:
        gamma = zero.copy()
    elif not interior:
        gamma = g.weight(k, l).copy()
    else:
        ik, ii = _blocks(n, [k]), _blocks(n, interior)
        L_kk = L[np.ix_(ik, ik)]
        L_ki = L[np.ix_(ik, ii)]
        L_ik = L[np.ix_(ii, ik)]
        L_ii = L[np.ix_(ii, ii)]
        E = -pseudo_inverse(L_ii, tol) @ L_ik
        gamma = L_kk + L_ki @ E
        for pos, i in enumerate(interior):
            X[i - 1] = E[pos * n:(pos + 1) * n]
    gamma = 0.5 * (gamma + gamma.conj().T)
    scale = float(np.linalg.norm(L, 2))
    # gamma is PSD in exact arithmetic. Eigenvalues under the rank cutoff
    # (relative to ||L||) are rounding residue of a cancellation and are set
    # to zero, so the matrix agrees with the rank reported for it.
    w, Q = np.linalg.eigh(gamma)
    if w.size and w[0] < -tol.psd_slack * max(scale, np.finfo(float).tiny):
        raise NumericalError(
            f"effective conductance ({k},{l}): eigenvalue {w[0]:.3e} is negative beyond psd_slack"
        )
    cutoff = tol.rank_rtol * max(float(w[-1]) if w.size else 0.0, scale) * n
    small = np.abs(w) <= cutoff
    if np.any(small & (w != 0)) or np.any(w < 0):
        gamma = (Q * np.where(small, 0.0, np.maximum(w, 0.0))) @ Q.conj().T
        gamma = 0.5 * (gamma + gamma.conj().T)

    Xs = np.vstack(X)
    rhs = difference_operator(q, n, k, l) @ gamma
    residual = float(np.linalg.norm(L @ Xs - rhs, 2))
    allowed = tol.subspace_atol * max(scale, np.finfo(float).tiny) * max(1.0, float(np.linalg.norm(Xs, 2)))
    if residual > allowed:
        raise NumericalError(
            f"effective conductance ({k},{l}): defining-equation residual {residual:.3e} "
            f"exceeds {allowed:.3e}"
        )
    gamma.setflags(write=False)
    for Xi in X:
        Xi.setflags(write=False)
    return EffectiveConductance(k, l, gamma, tuple(X), residual)


def to_dot(g: NGraph, name: str = "G", tol: Tolerance = DEFAULT_TOL) -> str:
    """Graphviz rendering of a 1-graph; an edge is drawn iff its weight is positive."""
    if g.n != 1:
        raise ValidationError("DOT export is defined for 1-graphs only (scalar weights)")
    values = {pair: float(np.real(G[0, 0])) for pair, G in g.weights.items()}
    wmax = max(values.values(), default=0.0)
    cut = tol.rank_rtol * max(wmax, g.scale) * g.q
    lines = [f"graph {name} {{"]
    lines.extend(f"  v{i};" for i in range(1, g.q + 1))
    for (i, j) in sorted(values):
        w = values[(i, j)]
        if w > cut and w > 0:
            lines.append(f'  v{i} -- v{j} [weight="{w:.12g}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
