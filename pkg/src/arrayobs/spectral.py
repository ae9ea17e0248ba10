"""Eigenstructure of the individual system matrix and eigengraph construction."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .array_model import ArraySystem
from .ngraph import NGraph, graph_from_matrices
from .numerics import (
    DEFAULT_TOL,
    Tolerance,
    ValidationError,
    as_cmatrix,
    general_eigenvalues,
    null_space_basis,
)


class ClusteringWarning(UserWarning):
    """Two eigenvalue clusters lie uncomfortably close to each other."""


@dataclass(frozen=True)
class EigenEntry:
    mu: complex
    V: np.ndarray
    algebraic_mult: int

    @property
    def n_sigma(self) -> int:
        return self.V.shape[1]


@dataclass(frozen=True)
class EigStructure:
    entries: tuple[EigenEntry, ...]
    cluster_radius: float
    diagnostics: tuple[str, ...] = field(default=())

    @property
    def m(self) -> int:
        return len(self.entries)

    @property
    def nonderogatory(self) -> bool:
        return all(e.n_sigma == 1 for e in self.entries)

    def __getitem__(self, sigma: int) -> EigenEntry:
        """Entry for the 1-based eigenvalue label ``sigma``."""
        if not 1 <= sigma <= self.m:
            raise IndexError(f"sigma={sigma} outside 1..{self.m}")
        return self.entries[sigma - 1]


def _single_linkage(values: np.ndarray, radius: float) -> list[list[int]]:
    parent = list(range(len(values)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a in range(len(values)):
        for b in range(a + 1, len(values)):
            if abs(values[a] - values[b]) <= radius:
                parent[find(a)] = find(b)
    groups: dict[int, list[int]] = {}
    for a in range(len(values)):
        groups.setdefault(find(a), []).append(a)
    return list(groups.values())


def _order_key(mu: complex, radius: float):
    # modulus first, real before complex, then descending real/imag parts
    digits = max(0, int(-np.floor(np.log10(max(radius, 1e-300)))))
    return (round(abs(mu), digits), abs(mu.imag) > radius, round(-mu.real, digits), round(-mu.imag, digits))


def eig_structure(A, tol: Tolerance = DEFAULT_TOL) -> EigStructure:
    """Distinct eigenvalues of A with orthonormal eigenvector bases.

    Eigenvalues are grouped by single linkage with radius
    ``eig_cluster_atol * max(1, ||A||)``; each group is represented by its
    mean and its eigenvectors are the null space of ``A - mu I``.
    """
    A = as_cmatrix(A, "A")
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValidationError(f"A: expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.linalg.norm(A, 2)))
    radius = tol.eig_cluster_atol * scale
    values = general_eigenvalues(A, tol)
    groups = _single_linkage(values, radius)
    centers = [complex(np.mean(values[g])) for g in groups]

    diagnostics = []
    for a in range(len(centers)):
        for b in range(a + 1, len(centers)):
            if abs(centers[a] - centers[b]) < 2 * radius:
                msg = (
                    f"eigenvalue clusters {centers[a]:.6g} and {centers[b]:.6g} are closer "
                    f"than twice the clustering radius {radius:.3g}"
                )
                diagnostics.append(msg)
                warnings.warn(msg, ClusteringWarning, stacklevel=2)

    entries = []
    eye = np.eye(n, dtype=np.complex128)
    for g, mu in sorted(zip(groups, centers), key=lambda gc: _order_key(gc[1], radius)):
        V = null_space_basis(A - mu * eye, tol, scale=scale)
        if V.shape[1] == 0:
            # cluster centre drifted off the spectrum; keep the least-singular direction
            _, _, Vh = np.linalg.svd(A - mu * eye)
            V = Vh[-1:].conj().T.copy()
            diagnostics.append(f"eigenvalue {mu:.6g}: null space empty at rank_rtol, kept one direction")
        if len(g) < V.shape[1]:
            diagnostics.append(
                f"eigenvalue {mu:.6g}: geometric multiplicity {V.shape[1]} exceeds algebraic {len(g)}"
            )
        V.setflags(write=False)
        entries.append(EigenEntry(mu, V, len(g)))
    return EigStructure(tuple(entries), radius, tuple(diagnostics))


def eigengraph(sys: ArraySystem, sigma: int, eig: EigStructure) -> NGraph:
    """The ``n_sigma``-graph with weights ``(C_ij V_sigma)^* (C_ij V_sigma)``."""
    if not isinstance(sigma, (int, np.integer)) or not 1 <= sigma <= eig.m:
        raise ValidationError(f"sigma={sigma!r} outside 1..{eig.m}")
    V = eig[sigma].V
    if V.shape[0] != sys.n:
        raise ValidationError("eigen-structure does not match the array's state dimension")
    return eigengraph_with_basis(sys, V)


def eigengraph_with_basis(sys: ArraySystem, V) -> NGraph:
    """Eigengraph for an explicitly supplied eigenvector basis (any full-column-rank V)."""
    V = as_cmatrix(V, "V")
    if V.shape[0] != sys.n:
        raise ValidationError(f"V: expected {sys.n} rows, got {V.shape[0]}")
    H = {pair: C @ V for pair, C in sys.couplings.items()}
    v_norm = np.linalg.norm(V, 2) if V.size else 0.0
    scale = max((np.linalg.norm(C, 2) * v_norm for C in sys.couplings.values()), default=0.0) ** 2
    return graph_from_matrices(H, sys.q, V.shape[1], scale=scale)
