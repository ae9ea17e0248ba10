"""Analytic trajectories, brute-force oracles and coupled-oscillator arrays.

All propagation is exact (matrix exponential); nothing here integrates an
ODE numerically. The oracles deliberately avoid the graph and decision
modules so that they can referee them.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .array_model import ArraySystem, canonical_pair, observability_matrix
from .numerics import (
    DEFAULT_TOL,
    Tolerance,
    ValidationError,
    as_cmatrix,
    matrix_exp,
    null_space_basis,
)


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of q systems.

    ``states`` has shape ``(T, q, n)``; ``outputs`` maps each coupled pair
    to ``y_ij`` of shape ``(T, m_ij)``.
    """

    times: np.ndarray
    states: np.ndarray
    outputs: Mapping[tuple[int, int], np.ndarray]

    @property
    def q(self) -> int:
        return self.states.shape[1]

    def disagreement(self, i: int, j: int) -> np.ndarray:
        return np.linalg.norm(self.states[:, i - 1] - self.states[:, j - 1], axis=1)

    def disagreements(self) -> dict[tuple[int, int], np.ndarray]:
        q = self.q
        return {(i, j): self.disagreement(i, j) for i in range(1, q + 1) for j in range(i + 1, q + 1)}

    def output_norms(self) -> dict[tuple[int, int], np.ndarray]:
        return {p: np.linalg.norm(y, axis=1) for p, y in sorted(self.outputs.items())}

    def max_disagreement(self) -> np.ndarray:
        d = self.disagreements()
        if not d:
            return np.zeros(len(self.times))
        return np.max(np.vstack(list(d.values())), axis=0)


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float).ravel()
    if t.size == 0:
        raise ValidationError("times: need at least one sample")
    if not np.all(np.isfinite(t)):
        raise ValidationError("times: non-finite entries")
    if np.any(np.diff(t) < 0):
        raise ValidationError("times: must be ascending")
    return t


def _check_initial(x0, q, n) -> np.ndarray:
    x0 = np.asarray(x0, dtype=np.complex128)
    if x0.shape == (q * n,):
        x0 = x0.reshape(q, n)
    if x0.shape != (q, n):
        raise ValidationError(f"initial condition: expected {q} vectors of length {n}, got shape {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise ValidationError("initial condition: non-finite entries")
    return x0


def _outputs(sys: ArraySystem, states: np.ndarray) -> dict:
    out = {}
    for (i, j), C in sys.couplings.items():
        diff = states[:, i - 1] - states[:, j - 1]
        out[(i, j)] = diff @ C.T
    return out


def simulate(sys: ArraySystem, x0, times) -> Trajectory:
    """Uncoupled array: ``x_i(t) = exp(A t) x_i(0)`` for every system."""
    t = _check_times(times)
    x0 = _check_initial(x0, sys.q, sys.n)
    states = np.empty((t.size, sys.q, sys.n), dtype=np.complex128)
    for idx, tk in enumerate(t):
        states[idx] = x0 @ matrix_exp(sys.A, tk).T
    return Trajectory(t, states, _outputs(sys, states))


def simulate_stacked(M, sys: ArraySystem, x0, times) -> Trajectory:
    """Propagate the stacked state ``xi' = M xi`` (e.g. a closed-loop coupled array)."""
    t = _check_times(times)
    x0 = _check_initial(x0, sys.q, sys.n)
    M = as_cmatrix(M, "M")
    if M.shape != (sys.q * sys.n,) * 2:
        raise ValidationError(f"M: expected shape {(sys.q * sys.n,) * 2}, got {M.shape}")
    xi0 = x0.reshape(-1)
    states = np.empty((t.size, sys.q, sys.n), dtype=np.complex128)
    for idx, tk in enumerate(t):
        states[idx] = (matrix_exp(M, tk) @ xi0).reshape(sys.q, sys.n)
    return Trajectory(t, states, _outputs(sys, states))


# ---------------------------------------------------------------- oracles


def _direct_laplacian(sys: ArraySystem) -> np.ndarray:
    q, n = sys.q, sys.n
    L = np.zeros((q * n, q * n), dtype=np.complex128)
    for (i, j), C in sys.couplings.items():
        W = observability_matrix(C, sys.A)
        e = np.zeros((q, 1))
        e[i - 1], e[j - 1] = 1.0, -1.0
        L += np.kron(e @ e.T, W.conj().T @ W)
    return L


def _sync_projector_complement(q: int, n: int) -> np.ndarray:
    S = np.kron(np.ones((q, 1)), np.eye(n)) / np.sqrt(q)
    return np.eye(q * n) - S @ S.T


@dataclass(frozen=True)
class OracleVerdict:
    holds: bool
    witness: np.ndarray | None = None
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.holds


def oracle_observable(sys: ArraySystem, tol: Tolerance = DEFAULT_TOL) -> OracleVerdict:
    """Observable iff the null space of the interconnection Laplacian is the sync subspace.

    Zero relative outputs are equivalent to ``L xi(0) = 0``, so any null
    vector off the sync subspace is an initial condition that stays silent
    yet is not synchronized.
    """
    q, n = sys.q, sys.n
    if q == 1:
        return OracleVerdict(True)
    N = null_space_basis(_direct_laplacian(sys), tol)
    off = _sync_projector_complement(q, n) @ N
    if N.shape[1] == 0:
        return OracleVerdict(True)
    U, s, _ = np.linalg.svd(off, full_matrices=False)
    if s[0] <= tol.subspace_atol:
        return OracleVerdict(True, details={"null_dim": N.shape[1]})
    coeff = np.linalg.lstsq(N, U[:, 0], rcond=None)[0]
    return OracleVerdict(False, N @ coeff, {"null_dim": N.shape[1]})


def silence_check_grid(A, tol: Tolerance = DEFAULT_TOL, samples: int = 32) -> np.ndarray:
    """32 times on ``[0, 2 pi n / gap]``, gap being the smallest eigenvalue separation.

    The horizon is shortened when the fastest growing mode would overflow.
    """
    A = as_cmatrix(A, "A")
    n = A.shape[0]
    ev = np.linalg.eigvals(A)
    radius = tol.eig_cluster_atol * max(1.0, float(np.linalg.norm(A, 2)))
    gaps = [abs(a - b) for ia, a in enumerate(ev) for b in ev[ia + 1:] if abs(a - b) > radius]
    gap = min(gaps) if gaps else 1.0
    horizon = 2 * np.pi * n / gap
    growth = max(float(np.max(ev.real)), 0.0)
    if growth > 0:
        horizon = min(horizon, 200.0 / growth)
    return np.linspace(0.0, horizon, samples)


def outputs_vanish(sys: ArraySystem, x0, tol: Tolerance = DEFAULT_TOL, times=None) -> bool:
    """Sampled check that every ``y_ij`` is zero along the analytic solution from ``x0``."""
    times = silence_check_grid(sys.A, tol) if times is None else times
    traj = simulate(sys, x0, times)
    x0 = _check_initial(x0, sys.q, sys.n)
    scale0 = max(float(np.max(np.linalg.norm(x0, axis=1))), np.finfo(float).tiny)
    for idx, tk in enumerate(traj.times):
        growth = max(1.0, float(np.linalg.norm(matrix_exp(sys.A, tk), 2)))
        for pair, y in traj.outputs.items():
            C = sys.couplings[pair]
            bound = tol.subspace_atol * max(float(np.linalg.norm(C, 2)), 1.0) * growth * scale0
            if np.linalg.norm(y[idx]) > bound:
                return False
    return True


def _pair_diff(x: np.ndarray, q: int, n: int, k: int, l: int) -> np.ndarray:
    x = x.reshape(q, n)
    return x[k - 1] - x[l - 1]


def _samples(N: np.ndarray, count: int, rng) -> list[np.ndarray]:
    cols = [N[:, c] for c in range(N.shape[1])]
    for _ in range(count):
        coeff = rng.standard_normal(N.shape[1]) + 1j * rng.standard_normal(N.shape[1])
        v = N @ coeff
        cols.append(v / np.linalg.norm(v))
    return cols


def oracle_pair_observable(
    sys: ArraySystem, k: int, l: int, tol: Tolerance = DEFAULT_TOL, x0_samples: int = 4, seed: int = 0
) -> OracleVerdict:
    """Sampled (k,l)-observability: silent initial conditions must have ``x_k(0) = x_l(0)``.

    Silent initial conditions are the Laplacian null space (checked again by
    simulation on the sampled grid). Since ``x_k - x_l`` evolves by
    ``exp(A t)``, agreement at t = 0 means agreement forever.
    """
    if k == l:
        raise ValidationError("pair must have distinct vertices")
    q, n = sys.q, sys.n
    rng = np.random.default_rng(seed)
    N = null_space_basis(_direct_laplacian(sys), tol)
    worst, witness = 0.0, None
    for v in _samples(N, x0_samples, rng):
        d = np.linalg.norm(_pair_diff(v, q, n, k, l))
        if d > worst:
            worst, witness = d, v
    silent = True
    if witness is not None:
        silent = outputs_vanish(sys, witness.reshape(q, n), tol)
    if worst <= tol.subspace_atol:
        return OracleVerdict(True, details={"max_diff": worst, "silent": silent})
    return OracleVerdict(False, witness, {"max_diff": worst, "silent": silent})


def _stable_subspace(A: np.ndarray, tol: Tolerance) -> np.ndarray:
    """Orthonormal basis of the sum of generalized eigenspaces with ``Re mu < -boundary_atol``."""
    T, Z, sdim = scipy.linalg.schur(
        A.astype(np.complex128), output="complex", sort=lambda z: z.real < -tol.boundary_atol
    )
    return Z[:, :sdim]


def oracle_pair_detectable(
    sys: ArraySystem,
    k: int,
    l: int,
    x0_samples: int = 4,
    horizon: float = 10.0,
    tol: Tolerance = DEFAULT_TOL,
    seed: int = 0,
) -> OracleVerdict:
    """Sampled (k,l)-detectability by modal inspection of silent trajectories.

    For each sampled silent initial condition the difference
    ``x_k(t) - x_l(t) = exp(A t) d0`` decays iff ``d0`` lies in the stable
    invariant subspace of A. The horizon grid is used only to confirm that
    the samples really keep every relative output at zero.
    """
    if k == l:
        raise ValidationError("pair must have distinct vertices")
    q, n = sys.q, sys.n
    rng = np.random.default_rng(seed)
    N = null_space_basis(_direct_laplacian(sys), tol)
    Zs = _stable_subspace(sys.A, tol)
    grid = np.linspace(0.0, horizon, 16)
    for v in _samples(N, x0_samples, rng):
        d0 = _pair_diff(v, q, n, k, l)
        if not outputs_vanish(sys, v.reshape(q, n), tol, times=grid):
            raise RuntimeError("oracle sample from the Laplacian null space produced nonzero outputs")
        unstable_part = d0 - Zs @ (Zs.conj().T @ d0)
        if np.linalg.norm(unstable_part) > tol.subspace_atol:
            return OracleVerdict(False, v, {"unstable_component": float(np.linalg.norm(unstable_part))})
    return OracleVerdict(True)


# ------------------------------------------------------------ oscillators


OSCILLATOR_KINDS = ("lc", "spring")


@dataclass(frozen=True)
class OscillatorSpec:
    """A chain of p nodes replicated q times with per-node dampers between replicas.

    ``masses`` holds inductances (LC) or masses (spring); ``stiffness``
    holds the p+1 capacitances or spring constants; ``conductances`` maps a
    pair of replicas to the p per-node damping coefficients.
    """

    masses: tuple[float, ...]
    stiffness: tuple[float, ...]
    conductances: Mapping[tuple[int, int], tuple[float, ...]] = field(default_factory=dict)

    @property
    def p(self) -> int:
        return len(self.masses)

    def validate(self, q: int):
        if self.p < 1:
            raise ValidationError("oscillator: need at least one node")
        if len(self.stiffness) != self.p + 1:
            raise ValidationError(f"oscillator: need {self.p + 1} stiffness values, got {len(self.stiffness)}")
        for name, vals in (("mass", self.masses), ("stiffness", self.stiffness)):
            for v in vals:
                if not np.isfinite(v) or v <= 0:
                    raise ValidationError(f"oscillator: {name} {v!r} must be positive")
        seen = set()
        for (i, j), b in self.conductances.items():
            if i == j or not (1 <= i <= q and 1 <= j <= q):
                raise ValidationError(f"oscillator: bad conductance pair ({i},{j}) for q={q}")
            pair = canonical_pair(i, j)
            if pair in seen:
                raise ValidationError(f"oscillator: conductance pair ({i},{j}) given twice")
            seen.add(pair)
            if len(b) != self.p:
                raise ValidationError(f"oscillator: pair ({i},{j}) needs {self.p} conductances")
            for v in b:
                if not np.isfinite(v) or v < 0:
                    raise ValidationError(f"oscillator: conductance {v!r} must be nonnegative")

    def mass_matrix(self) -> np.ndarray:
        return np.diag(np.asarray(self.masses, dtype=float))

    def stiffness_matrix(self) -> np.ndarray:
        k = np.asarray(self.stiffness, dtype=float)
        K = np.diag(k[:-1] + k[1:])
        off = -k[1:-1]
        return K + np.diag(off, 1) + np.diag(off, -1)

    def damping(self, i: int, j: int) -> np.ndarray:
        b = self.conductances.get(canonical_pair(i, j))
        if b is None:
            b = self.conductances.get((max(i, j), min(i, j)))
        return np.diag(np.zeros(self.p) if b is None else np.asarray(b, dtype=float))


def _kind_matrices(spec: OscillatorSpec, kind: str):
    """(stiffness-like block of A, matrix premultiplying B_ij in the coupling)."""
    M, K = spec.mass_matrix(), spec.stiffness_matrix()
    if kind == "lc":
        Kinv = np.linalg.inv(K)
        return Kinv @ np.linalg.inv(M), Kinv
    if kind == "spring":
        Minv = np.linalg.inv(M)
        return Minv @ K, Minv
    raise ValidationError(f"oscillator kind {kind!r} not in {OSCILLATOR_KINDS}")


def build_oscillator_array(spec: OscillatorSpec, q: int, kind: str) -> ArraySystem:
    spec.validate(q)
    p = spec.p
    stiff, _ = _kind_matrices(spec, kind)
    A = np.block([[np.zeros((p, p)), np.eye(p)], [-stiff, np.zeros((p, p))]])
    couplings = {}
    for i in range(1, q + 1):
        for j in range(i + 1, q + 1):
            B = spec.damping(i, j)
            if np.any(B):
                C = np.zeros((2 * p, 2 * p))
                C[p:, p:] = B
                couplings[(i, j)] = C
    return ArraySystem(A, q, couplings)


def build_lc_array(spec: OscillatorSpec, q: int) -> ArraySystem:
    """Coupled LC oscillators: ``A = [0 I; -K^-1 M^-1 0]`` and ``C_ij = [0 0; 0 B_ij]``."""
    return build_oscillator_array(spec, q, "lc")


def build_spring_array(spec: OscillatorSpec, q: int) -> ArraySystem:
    """Coupled mass-spring chains: ``A = [0 I; -M^-1 K 0]`` and ``C_ij = [0 0; 0 B_ij]``."""
    return build_oscillator_array(spec, q, "spring")


def closed_loop_matrix(spec: OscillatorSpec, q: int, kind: str) -> np.ndarray:
    """Stacked dynamics with the dampers engaged.

    ``x_i' = A x_i + sum_j [0 0; 0 F B_ij] (x_j - x_i)`` where F is
    ``K^-1`` (LC) or ``M^-1`` (spring).
    """
    spec.validate(q)
    p = spec.p
    stiff, F = _kind_matrices(spec, kind)
    A = np.block([[np.zeros((p, p)), np.eye(p)], [-stiff, np.zeros((p, p))]])
    n = 2 * p
    Mbig = np.kron(np.eye(q), A)
    for i in range(1, q + 1):
        for j in range(i + 1, q + 1):
            B = spec.damping(i, j)
            if not np.any(B):
                continue
            blk = np.zeros((n, n))
            blk[p:, p:] = F @ B
            e = np.zeros((q, 1))
            e[i - 1], e[j - 1] = 1.0, -1.0
            Mbig -= np.kron(e @ e.T, blk)
    return Mbig


def energy_matrix(spec: OscillatorSpec, kind: str) -> np.ndarray:
    """Per-system quadratic form of the stored energy.

    LC: ``diag(M^-1, K)``; spring: ``diag(K, M)``.
    """
    M, K = spec.mass_matrix(), spec.stiffness_matrix()
    p = spec.p
    Z = np.zeros((p, p))
    if kind == "lc":
        return np.block([[np.linalg.inv(M), Z], [Z, K]])
    if kind == "spring":
        return np.block([[K, Z], [Z, M]])
    raise ValidationError(f"oscillator kind {kind!r} not in {OSCILLATOR_KINDS}")


def simulate_coupled(spec: OscillatorSpec, q: int, kind: str, x0, times) -> Trajectory:
    sys = build_oscillator_array(spec, q, kind)
    return simulate_stacked(closed_loop_matrix(spec, q, kind), sys, x0, times)


def lyapunov_values(spec: OscillatorSpec, kind: str, traj: Trajectory) -> np.ndarray:
    """``V = 1/2 sum_i x_i^* P x_i`` at every sample."""
    P = energy_matrix(spec, kind)
    x = traj.states
    return 0.5 * np.real(np.einsum("tqa,ab,tqb->t", x.conj(), P, x))


@dataclass(frozen=True)
class LyapunovReport:
    values: np.ndarray
    max_increase: float
    relative_max_increase: float

    @property
    def nonincreasing(self) -> bool:
        return self.relative_max_increase <= 1e-8


def lyapunov_check(sys: ArraySystem, spec: OscillatorSpec, traj: Trajectory, kind: str = "lc") -> LyapunovReport:
    """Largest step-to-step increase of the stored energy along ``traj``."""
    if sys.n != 2 * spec.p or traj.states.shape[1:] != (sys.q, sys.n):
        raise ValidationError("trajectory does not match the oscillator array dimensions")
    V = lyapunov_values(spec, kind, traj)
    jumps = np.diff(V)
    max_inc = float(max(np.max(jumps, initial=0.0), 0.0))
    rel = max_inc / V[0] if V[0] > 0 else max_inc
    return LyapunovReport(V, max_inc, rel)


# --------------------------------------------------------------- export


def trajectory_to_csv(traj: Trajectory, energy: Sequence[float] | None = None) -> str:
    """CSV with a time column, per-system state columns, disagreement and output norms.

    Imaginary state columns appear only for genuinely complex trajectories.
    """
    q, n = traj.states.shape[1], traj.states.shape[2]
    complex_states = bool(np.any(traj.states.imag != 0))
    header = ["t"]
    for i in range(1, q + 1):
        for r in range(1, n + 1):
            header.append(f"x{i}_{r}")
            if complex_states:
                header.append(f"x{i}_{r}_im")
    dis = traj.disagreements()
    header += [f"d_{i}_{j}" for (i, j) in dis]
    ynorms = traj.output_norms()
    header += [f"y_{i}_{j}" for (i, j) in ynorms]
    if energy is not None:
        header.append("V")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for idx, t in enumerate(traj.times):
        row = [repr(float(t))]
        for i in range(q):
            for r in range(n):
                z = traj.states[idx, i, r]
                row.append(repr(float(z.real)))
                if complex_states:
                    row.append(repr(float(z.imag)))
        row += [repr(float(v[idx])) for v in dis.values()]
        row += [repr(float(v[idx])) for v in ynorms.values()]
        if energy is not None:
            row.append(repr(float(energy[idx])))
        writer.writerow(row)
    return buf.getvalue()
