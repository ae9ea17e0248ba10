"""Observability, detectability and their pairwise versions.

Each verdict has a primary criterion and, where one exists, an independent
second route; when both run they must agree or :class:`PathDisagreement`
is raised. Disagreement means the tolerances do not suit the instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .array_model import ArraySystem, build_observability_data
from .ngraph import (
    Connectivity,
    EffectiveConductance,
    LaplacianView,
    NGraph,
    _check_pair,
    _normalize_phase,
    difference_operator,
    effective_conductance,
    graph_from_matrices,
    is_connected,
    is_pair_connected,
    laplacian,
    sync_basis,
)
from .numerics import DEFAULT_TOL, NumericalError, Tolerance, null_space_basis, numerical_rank
from .spectral import EigStructure, eig_structure, eigengraph


class PathDisagreement(NumericalError):
    """Two independent decision routes returned different verdicts."""


class ArrayAnalysis:
    """Lazily computed graphs and spectra for one array, shared by all verdicts."""

    def __init__(self, sys: ArraySystem, tol: Tolerance = DEFAULT_TOL):
        self.sys = sys
        self.tol = tol

    @cached_property
    def observability(self):
        return build_observability_data(self.sys, self.tol)

    @cached_property
    def interconnection(self) -> NGraph:
        return graph_from_matrices(self.observability.W, self.sys.q, self.sys.n)

    @cached_property
    def interconnection_view(self) -> LaplacianView:
        return laplacian(self.interconnection, self.tol)

    @cached_property
    def eig(self) -> EigStructure:
        return eig_structure(self.sys.A, self.tol)

    @cached_property
    def eigengraphs(self) -> tuple[NGraph, ...]:
        return tuple(eigengraph(self.sys, s, self.eig) for s in range(1, self.eig.m + 1))

    @cached_property
    def eigengraph_views(self) -> tuple[LaplacianView, ...]:
        return tuple(laplacian(g, self.tol) for g in self.eigengraphs)

    @cached_property
    def eigengraph_connectivity(self) -> tuple[Connectivity, ...]:
        return tuple(
            is_connected(g, self.tol, view=v) for g, v in zip(self.eigengraphs, self.eigengraph_views)
        )

    def re_nonneg(self, sigma: int) -> bool:
        return self.eig[sigma].mu.real >= -self.tol.boundary_atol

    def marginal(self, sigma: int) -> bool:
        return abs(self.eig[sigma].mu.real) <= self.tol.boundary_atol

    def lift(self, sigma: int, eta: np.ndarray) -> np.ndarray:
        """Map an eigengraph null vector to the full state space: ``(I_q (x) V_sigma) eta``."""
        V = self.eig[sigma].V
        return np.kron(np.eye(self.sys.q), V) @ eta

    def conductance(self, k: int, l: int) -> EffectiveConductance:
        key = (k, l)
        cache = self.__dict__.setdefault("_conductance", {})
        if key not in cache:
            cache[key] = effective_conductance(self.interconnection, k, l, self.tol)
        return cache[key]

    @property
    def laplacian_scale(self) -> float:
        L = self.interconnection_view.L
        return float(np.linalg.norm(L, 2)) if L.size else 0.0


def _analysis(sys_or_analysis, tol) -> ArrayAnalysis:
    if isinstance(sys_or_analysis, ArrayAnalysis):
        return sys_or_analysis
    return ArrayAnalysis(sys_or_analysis, tol)


@dataclass(frozen=True)
class ObservabilityVerdict:
    observable: bool
    graph_connected: bool
    eigengraphs_connected: tuple[bool, ...] | None
    witness: np.ndarray | None

    def __bool__(self):
        return self.observable


def is_observable(sys, tol: Tolerance = DEFAULT_TOL, cross_check: bool = True) -> ObservabilityVerdict:
    """Interconnection graph connected; cross-checked against all eigengraphs connected."""
    an = _analysis(sys, tol)
    primary = is_connected(an.interconnection, an.tol, view=an.interconnection_view)
    eig_flags = None
    if cross_check:
        eig_flags = tuple(c.connected for c in an.eigengraph_connectivity)
        if all(eig_flags) != primary.connected:
            lam = [round(float(v.eigenvalues[min(g.n, len(v.eigenvalues) - 1)]), 15)
                   for g, v in zip(an.eigengraphs, an.eigengraph_views)]
            raise PathDisagreement(
                f"observability: interconnection graph says {primary.connected} "
                f"(lambda_n+1={primary.lambda_next}, threshold={primary.threshold}), "
                f"eigengraphs say {eig_flags} (lambda_n+1 per eigengraph {lam})"
            )
    return ObservabilityVerdict(primary.connected, primary.connected, eig_flags, primary.witness)


@dataclass(frozen=True)
class DetectabilityVerdict:
    detectable: bool
    per_eigengraph: tuple  # (mu, connected, re_nonneg)
    marginal: tuple[complex, ...]
    witness: np.ndarray | None

    def __bool__(self):
        return self.detectable


def _sigma_sync_defect(an: ArrayAnalysis, sigma: int) -> tuple[float, np.ndarray | None]:
    """Largest off-sync component of ``range(I_q (x) V_sigma) & null L``.

    Works on the interconnection Laplacian directly, so it is independent of
    the eigengraph Laplacians.
    """
    q, n = an.sys.q, an.sys.n
    Z = np.kron(np.eye(q), an.eig[sigma].V)
    L = an.interconnection_view.L
    eta = null_space_basis(L @ Z, an.tol, scale=an.laplacian_scale)
    if eta.shape[1] == 0:
        return 0.0, None
    zeta = Z @ eta
    S = sync_basis(q, n)
    off = zeta - S @ (S.conj().T @ zeta)
    U, s, _ = np.linalg.svd(off, full_matrices=False)
    coeff = np.linalg.lstsq(zeta, U[:, 0], rcond=None)[0]
    return float(s[0]), _normalize_phase(zeta @ coeff)


def is_detectable(sys, tol: Tolerance = DEFAULT_TOL, cross_check: bool = True) -> DetectabilityVerdict:
    """Every eigengraph with ``Re mu >= -boundary_atol`` is connected."""
    an = _analysis(sys, tol)
    rows = []
    marginal = []
    witness = None
    detectable = True
    for sigma in range(1, an.eig.m + 1):
        conn = an.eigengraph_connectivity[sigma - 1]
        rhp = an.re_nonneg(sigma)
        rows.append((an.eig[sigma].mu, conn.connected, rhp))
        if an.marginal(sigma):
            marginal.append(an.eig[sigma].mu)
        if rhp and not conn.connected:
            detectable = False
            if witness is None:
                witness = _normalize_phase(an.lift(sigma, conn.witness))
        if cross_check and rhp:
            defect, _ = _sigma_sync_defect(an, sigma)
            alt_connected = defect <= an.tol.subspace_atol
            if alt_connected != conn.connected:
                raise PathDisagreement(
                    f"detectability at mu={an.eig[sigma].mu:.6g}: eigengraph says "
                    f"{conn.connected}, interconnection-Laplacian intersection says "
                    f"{alt_connected} (off-sync defect {defect:.3e})"
                )
    return DetectabilityVerdict(detectable, tuple(rows), tuple(marginal), witness)


@dataclass(frozen=True)
class PairVerdict:
    k: int
    l: int
    pair_observable: bool
    graph_pair_connected: bool
    conductance_rank: int | None
    conductance: EffectiveConductance | None
    witness: np.ndarray | None

    def __bool__(self):
        return self.pair_observable


def conductance_rank(an: ArrayAnalysis, ec: EffectiveConductance) -> int:
    # reference scale is ||L||: a conductance that is zero in exact arithmetic is pure noise
    return numerical_rank(ec.gamma, an.tol, scale=an.laplacian_scale)


def is_pair_observable(sys, k: int, l: int, tol: Tolerance = DEFAULT_TOL, cross_check: bool = True) -> PairVerdict:
    """Interconnection graph (k,l)-connected; cross-checked by full-rank effective conductance."""
    an = _analysis(sys, tol)
    _check_pair(an.sys.q, k, l)
    primary = is_pair_connected(an.interconnection, k, l, an.tol, view=an.interconnection_view)
    rank = None
    ec = None
    if cross_check:
        ec = an.conductance(k, l)
        rank = conductance_rank(an, ec)
        if (rank == an.sys.n) != primary.connected:
            raise PathDisagreement(
                f"({k},{l})-observability: pair connectivity says {primary.connected}, "
                f"effective conductance rank is {rank} of {an.sys.n}"
            )
    return PairVerdict(k, l, primary.connected, primary.connected, rank, ec, primary.witness)


@dataclass(frozen=True)
class PairDetectability:
    k: int
    l: int
    pair_detectable: bool
    failing_eigenvalues: tuple[complex, ...]
    witness: np.ndarray | None

    def __bool__(self):
        return self.pair_detectable


def is_pair_detectable(sys, k: int, l: int, tol: Tolerance = DEFAULT_TOL) -> PairDetectability:
    """Rank of ``[A - mu I; Gamma_kl]`` equals n at every eigenvalue with ``Re mu >= -boundary_atol``.

    Off the spectrum of A the upper block alone has rank n, so only the
    closed right half-plane eigenvalues need checking.
    """
    an = _analysis(sys, tol)
    _check_pair(an.sys.q, k, l)
    n = an.sys.n
    ec = an.conductance(k, l)
    A = an.sys.A
    a_scale = max(1.0, float(np.linalg.norm(A, 2)))
    g_scale = max(an.laplacian_scale, np.finfo(float).tiny)
    failing = []
    witness = None
    for sigma in range(1, an.eig.m + 1):
        if not an.re_nonneg(sigma):
            continue
        mu = an.eig[sigma].mu
        # row-block scaling leaves the rank unchanged but balances the two blocks
        stacked = np.vstack([(A - mu * np.eye(n)) / a_scale, ec.gamma / g_scale])
        if numerical_rank(stacked, an.tol, scale=1.0) < n:
            failing.append(mu)
            if witness is None:
                rho = null_space_basis(stacked, an.tol, scale=1.0)[:, 0]
                witness = _normalize_phase(ec.stacked_potentials() @ rho)
    return PairDetectability(k, l, not failing, tuple(failing), witness)


def eigengraph_necessity_check(sys, k: int, l: int, tol: Tolerance = DEFAULT_TOL) -> tuple[bool, ...]:
    """(k,l)-connectivity of every eigengraph.

    Necessary for (k,l)-observability but not sufficient: an array can fail
    to be (k,l)-observable while every eigengraph is (k,l)-connected.
    """
    an = _analysis(sys, tol)
    _check_pair(an.sys.q, k, l)
    return tuple(
        is_pair_connected(g, k, l, an.tol, view=v).connected
        for g, v in zip(an.eigengraphs, an.eigengraph_views)
    )


@dataclass
class PairSummary:
    pair_observable: bool
    pair_detectable: bool
    conductance_rank: int | None
    eigengraph_pair_connected: tuple[bool, ...]


@dataclass
class EigengraphSummary:
    mu: complex
    n_sigma: int
    algebraic_mult: int
    connected: bool
    re_nonneg: bool


@dataclass
class AnalysisReport:
    q: int
    n: int
    observable: bool
    detectable: bool
    nonderogatory: bool
    per_eigengraph: list[EigengraphSummary]
    pairwise: dict[tuple[int, int], PairSummary] = field(default_factory=dict)
    witnesses: dict[str, np.ndarray] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)
    cross_checked: bool = True


def analyze(
    sys: ArraySystem,
    pairs=(),
    tol: Tolerance = DEFAULT_TOL,
    cross_check: bool = True,
) -> AnalysisReport:
    """Run every verdict on one array and collect the results."""
    an = ArrayAnalysis(sys, tol)
    obs = is_observable(an, tol, cross_check=cross_check)
    det = is_detectable(an, tol, cross_check=cross_check)
    per = [
        EigengraphSummary(e.mu, e.n_sigma, e.algebraic_mult, c.connected, an.re_nonneg(s))
        for s, (e, c) in enumerate(zip(an.eig.entries, an.eigengraph_connectivity), start=1)
    ]
    witnesses = {}
    if obs.witness is not None:
        witnesses["observable"] = obs.witness
    if det.witness is not None:
        witnesses["detectable"] = det.witness
    diagnostics = list(an.eig.diagnostics)
    for mu in det.marginal:
        diagnostics.append(f"eigenvalue {mu:.6g} lies within boundary_atol of the imaginary axis")

    pairwise = {}
    for k, l in pairs:
        pv = is_pair_observable(an, k, l, tol, cross_check=cross_check)
        pd = is_pair_detectable(an, k, l, tol)
        screen = eigengraph_necessity_check(an, k, l, tol)
        rank = pv.conductance_rank
        if rank is None:
            rank = conductance_rank(an, an.conductance(k, l))
        pairwise[(k, l)] = PairSummary(pv.pair_observable, pd.pair_detectable, rank, screen)
        if pv.witness is not None:
            witnesses[f"pair_observable_{k}_{l}"] = pv.witness
        if pd.witness is not None:
            witnesses[f"pair_detectable_{k}_{l}"] = pd.witness
        if pv.pair_observable and not all(screen):
            diagnostics.append(f"pair ({k},{l}): observable but an eigengraph is not ({k},{l})-connected")

    return AnalysisReport(
        q=sys.q,
        n=sys.n,
        observable=obs.observable,
        detectable=det.detectable,
        nonderogatory=an.eig.nonderogatory,
        per_eigengraph=per,
        pairwise=pairwise,
        witnesses=witnesses,
        diagnostics=diagnostics,
        cross_checked=cross_check,
    )
