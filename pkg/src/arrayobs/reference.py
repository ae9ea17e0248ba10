"""Reference arrays with known verdicts, shipped as fixtures.

``six_state_array`` is observable although no single coupled pair is;
``nilpotent_array`` is not (2,3)-observable even though its only
eigengraph is (2,3)-connected.
"""

import numpy as np

from .array_model import ArraySystem
from .dynamics import OscillatorSpec


def six_state_array() -> ArraySystem:
    A = np.array(
        [
            [0, 1, -7, -14, 21, 31],
            [1, 1, 1, 3, -7, -11],
            [3, 6, -28, -43, 7, 5],
            [-2, -4, 18, 28, -7, -7],
            [-2, -4, -2, 1, -32, -49],
            [1, 2, 3, 2, 20, 31],
        ],
        dtype=float,
    )
    couplings = {
        (1, 2): [[2, 3, 8, 12, 6, 10]],
        (2, 3): [[2, 3, 4, 6, 6, 9]],
        (3, 4): [[4, 6, 6, 10, 6, 9]],
        (1, 4): [[1, 2, 6, 9, 4, 7]],
    }
    return ArraySystem(A, 4, couplings)


# hand-picked integer eigenvectors, in the order 0, 1, -1, j, -j
SIX_STATE_EIGENVECTORS = {
    0: np.array([-5, 2, -4, 3, 5, -3], dtype=complex),
    1: np.array([1, -1, -5, 3, -4, 3], dtype=complex),
    -1: np.array([-2, 1, 2, -1, 3, -2], dtype=complex),
    1j: np.array([-17, 4, -19, 14, 22, -13]) + 1j * np.array([0, 1, 8, -5, -3, 1]),
    -1j: np.array([-17, 4, -19, 14, 22, -13]) - 1j * np.array([0, 1, 8, -5, -3, 1]),
}


def nilpotent_array() -> ArraySystem:
    A = np.zeros((4, 4))
    A[0, 1] = 1
    A[2, 3] = 1
    couplings = {
        (1, 2): [[0, 0, 1, 0], [0, 0, 0, 1]],
        (2, 3): [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
        (1, 3): [[0, 1, 1, 0], [0, 0, 0, 1]],
    }
    return ArraySystem(A, 3, couplings)


NILPOTENT_EIGENBASIS = np.array([[1, 0], [0, 0], [0, 1], [0, 0]], dtype=complex)

NILPOTENT_EIGENGRAPH_LAPLACIAN = np.array(
    [
        [0, 0, 0, 0, 0, 0],
        [0, 2, 0, -1, 0, -1],
        [0, 0, 1, 0, -1, 0],
        [0, -1, 0, 1, 0, 0],
        [0, 0, -1, 0, 1, 0],
        [0, -1, 0, 0, 0, 1],
    ],
    dtype=float,
)

NILPOTENT_NULL_BASIS = np.array(
    [[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 1, 0], [0, 0, 1], [0, 1, 0]], dtype=float
)


def nilpotent_silent_solution(t: float) -> np.ndarray:
    """Closed-form silent solution that keeps systems 2 and 3 apart."""
    return np.array([[t, 1, 0, 0], [0, 0, 0, 0], [0, 0, 1, 0]], dtype=complex)


def scalar_path_array() -> ArraySystem:
    """Three scalar systems in a path 1-2-3 with unit couplings (A = 0)."""
    return ArraySystem(np.zeros((1, 1)), 3, {(1, 2): [[1.0]], (2, 3): [[1.0]]})


def two_vertex_array() -> ArraySystem:
    """Two systems, one observable coupling."""
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return ArraySystem(A, 2, {(1, 2): [[1.0, 0.0]]})


def uniform_oscillator_spec(p: int, q: int, mass=1.0, stiffness=1.0, conductance=1.0) -> OscillatorSpec:
    """Identical nodes, all replica pairs damped at every node."""
    b = tuple([float(conductance)] * p)
    return OscillatorSpec(
        masses=tuple([float(mass)] * p),
        stiffness=tuple([float(stiffness)] * (p + 1)),
        conductances={(i, j): b for i in range(1, q + 1) for j in range(i + 1, q + 1)},
    )
