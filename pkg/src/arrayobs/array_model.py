"""Arrays of identical LTI systems coupled through relative outputs.

System ``i`` evolves as ``dx_i/dt = A x_i`` and each unordered pair
``{i, j}`` exposes ``y_ij = C_ij (x_i - x_j)``. Vertex labels are 1-based
throughout the package (``1..q``), matching how arrays are written down
by hand and on the command line.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .numerics import DEFAULT_TOL, Tolerance, ValidationError, as_cmatrix, null_space_basis

Pair = tuple[int, int]


def canonical_pair(i: int, j: int) -> Pair:
    return (i, j) if i < j else (j, i)


def _check_index(i, q, what):
    if not isinstance(i, (int, np.integer)) or isinstance(i, bool):
        raise ValidationError(f"{what}: index {i!r} is not an integer")
    if not 1 <= i <= q:
        raise ValidationError(f"{what}: index {i} outside 1..{q}")


def symmetrize(raw_couplings: Mapping[Pair, object], n: int, q: int) -> dict[Pair, np.ndarray]:
    """Fold directed couplings into one matrix per unordered pair.

    When both ``(i, j)`` and ``(j, i)`` are supplied they are stacked as
    ``[C_ij; C_ji]`` (unconditionally, even if equal); the zero set of the
    stacked output is the intersection of the two. Empty or all-zero
    results are dropped so that "absent" is the only representation of a
    zero coupling.
    """
    directed: dict[Pair, np.ndarray] = {}
    for key, C in raw_couplings.items():
        i, j = key
        _check_index(i, q, "coupling")
        _check_index(j, q, "coupling")
        if i == j:
            raise ValidationError(f"coupling ({i},{j}): self-coupling C_ii must be zero")
        C = as_cmatrix(C, f"C_{i}{j}")
        if C.shape[1] != n:
            raise ValidationError(f"C_{i}{j}: expected {n} columns, got {C.shape[1]}")
        directed[(int(i), int(j))] = C

    out: dict[Pair, np.ndarray] = {}
    for (i, j) in sorted(directed):
        pair = canonical_pair(i, j)
        if pair in out:
            continue
        first = directed.get(pair)
        second = directed.get((pair[1], pair[0]))
        parts = [C for C in (first, second) if C is not None]
        stacked = np.vstack(parts) if len(parts) > 1 else parts[0]
        if stacked.shape[0] == 0 or not np.any(stacked):
            continue
        out[pair] = stacked
    return out


@dataclass(frozen=True)
class ArraySystem:
    """The pair ``[(C_ij), A]``: q systems of dimension n.

    ``couplings`` is keyed by canonical pairs ``(i, j)`` with ``i < j``;
    a missing key means ``C_ij = 0``.
    """

    A: np.ndarray
    q: int
    couplings: Mapping[Pair, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        A = as_cmatrix(self.A, "A").copy()
        if A.shape[0] != A.shape[1]:
            raise ValidationError(f"A: expected a square matrix, got shape {A.shape}")
        if A.shape[0] < 1:
            raise ValidationError("A: state dimension must be at least 1")
        if not isinstance(self.q, (int, np.integer)) or self.q < 1:
            raise ValidationError(f"q={self.q!r}: need at least one system")
        n = A.shape[0]
        A.setflags(write=False)
        couplings = {}
        for (i, j), C in self.couplings.items():
            if (i, j) != canonical_pair(i, j) and (j, i) in self.couplings:
                raise ValidationError(
                    f"couplings ({i},{j}) and ({j},{i}) both given; use symmetrize()"
                )
            couplings[canonical_pair(i, j)] = np.array(C, dtype=np.complex128)
        couplings = symmetrize(couplings, n, int(self.q))
        for C in couplings.values():
            C.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "couplings", MappingProxyType(couplings))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def coupling(self, i: int, j: int) -> np.ndarray:
        """``C_ij`` (zero 0-by-n matrix when absent)."""
        _check_index(i, self.q, "coupling")
        _check_index(j, self.q, "coupling")
        if i == j:
            return np.zeros((0, self.n), dtype=np.complex128)
        C = self.couplings.get(canonical_pair(i, j))
        return np.zeros((0, self.n), dtype=np.complex128) if C is None else C

    def pairs(self) -> list[Pair]:
        return sorted(self.couplings)

    def __eq__(self, other):
        if not isinstance(other, ArraySystem):
            return NotImplemented
        return (
            self.q == other.q
            and np.array_equal(self.A, other.A)
            and self.pairs() == other.pairs()
            and all(
                np.array_equal(self.couplings[p], other.couplings[p]) for p in self.pairs()
            )
        )

    __hash__ = None


def observability_matrix(C, A) -> np.ndarray:
    """Stack ``C, CA, ..., CA^(n-1)`` vertically; shape ``(n*m, n)``."""
    A = as_cmatrix(A, "A")
    C = as_cmatrix(C, "C")
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValidationError(f"A: expected a square matrix, got shape {A.shape}")
    if C.shape[1] != n:
        raise ValidationError(f"C: expected {n} columns, got {C.shape[1]}")
    blocks = [C]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


@dataclass(frozen=True)
class ObservabilityData:
    """Per-pair observability matrices ``W`` and unobservable-subspace bases."""

    n: int
    W: Mapping[Pair, np.ndarray]
    U_basis: Mapping[Pair, np.ndarray]

    def unobservable(self, i: int, j: int) -> np.ndarray:
        """Basis of ``null W_ij``; the whole space for absent pairs."""
        basis = self.U_basis.get(canonical_pair(i, j))
        return np.eye(self.n, dtype=np.complex128) if basis is None else basis


def build_observability_data(sys: ArraySystem, tol: Tolerance = DEFAULT_TOL) -> ObservabilityData:
    W = {}
    U = {}
    for pair, C in sys.couplings.items():
        W[pair] = observability_matrix(C, sys.A)
        U[pair] = null_space_basis(W[pair], tol)
    return ObservabilityData(sys.n, MappingProxyType(W), MappingProxyType(U))
