import warnings
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arrayobs import reference as ref
from arrayobs.array_model import ArraySystem, observability_matrix
from arrayobs.decisions import ArrayAnalysis
from arrayobs.ngraph import is_connected, is_pair_connected, laplacian, sync_basis
from arrayobs.numerics import ValidationError
from arrayobs.spectral import ClusteringWarning, eig_structure, eigengraph, eigengraph_with_basis
from helpers import span_equal, sweep_instances


def test_six_state_eigenstructure():
    eig = eig_structure(ref.six_state_array().A)
    assert eig.m == 5
    expected = [0, 1, -1, 1j, -1j]
    np.testing.assert_allclose([e.mu for e in eig.entries], expected, atol=1e-6)
    assert [e.n_sigma for e in eig.entries] == [1] * 5
    assert eig[1].algebraic_mult == 2
    assert sum(e.algebraic_mult for e in eig.entries) == 6
    assert eig.nonderogatory
    for e in eig.entries:
        assert span_equal(e.V, ref.SIX_STATE_EIGENVECTORS[complex(np.round(e.mu, 6))][:, None], atol=1e-6)


def test_nilpotent_eigenstructure():
    eig = eig_structure(ref.nilpotent_array().A)
    assert eig.m == 1
    assert eig[1].mu == 0
    assert eig[1].n_sigma == 2
    assert eig[1].algebraic_mult == 4
    assert span_equal(eig[1].V, ref.NILPOTENT_EIGENBASIS)
    assert not eig.nonderogatory


def test_identity_eigenstructure():
    eig = eig_structure(np.eye(3))
    assert eig.m == 1 and eig[1].mu == 1 and eig[1].n_sigma == 3


def test_nearly_identity_keeps_full_eigenspace():
    # A - mu I is pure rounding noise here; every direction is an eigenvector
    rng = np.random.default_rng(3)
    T = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    A = T @ (0.7 * np.eye(3)) @ np.linalg.inv(T)
    eig = eig_structure(A)
    assert eig.m == 1 and eig[1].n_sigma == 3


def test_close_clusters_raise_a_diagnostic():
    A = np.diag([0.0, 1.5e-7])
    with pytest.warns(ClusteringWarning):
        eig = eig_structure(A)
    assert eig.diagnostics


def test_well_separated_spectrum_is_quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        eig_structure(np.diag([1.0, 2.0, 3.0]))


def test_sigma_labels_are_one_based():
    eig = eig_structure(np.diag([1.0, 2.0]))
    with pytest.raises(IndexError):
        eig[0]
    with pytest.raises(ValidationError):
        eigengraph(ArraySystem(np.diag([1.0, 2.0]), 2), 3, eig)


def test_six_state_first_eigengraph_misses_edge_12():
    s = ref.six_state_array()
    eig = eig_structure(s.A)
    assert np.linalg.norm(s.couplings[(1, 2)] @ eig[1].V) <= 1e-10
    g = eigengraph(s, 1, eig)
    assert np.linalg.norm(g.weight(1, 2)) <= 1e-20
    assert np.linalg.norm(s.couplings[(1, 2)]) > 0
    for sigma in range(1, 6):
        assert is_connected(eigengraph(s, sigma, eig)).connected


def test_zero_couplings_give_empty_eigengraphs():
    s = ArraySystem(np.diag([1.0, -2.0]), 3)
    eig = eig_structure(s.A)
    for sigma in (1, 2):
        g = eigengraph(s, sigma, eig)
        assert not g.weights
        assert not is_connected(g).connected


@lru_cache(maxsize=1)
def _instances():
    return list(sweep_instances(60))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 59), st.data())
def test_eigenpairs_and_multiplicities(idx, data):
    s = _instances()[idx][1]
    eig = eig_structure(s.A)
    assert sum(e.algebraic_mult for e in eig.entries) == s.n
    for e in eig.entries:
        assert np.linalg.norm(s.A @ e.V - e.mu * e.V) <= 1e-8 * max(1.0, np.linalg.norm(s.A, 2))
        assert e.n_sigma <= e.algebraic_mult
    assert eig.nonderogatory == all(e.n_sigma == 1 for e in eig.entries)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 59), st.data())
def test_verdicts_do_not_depend_on_eigenbasis(idx, data):
    s = _instances()[idx][1]
    eig = eig_structure(s.A)
    sigma = data.draw(st.integers(1, eig.m))
    V = eig[sigma].V
    rng = np.random.default_rng(data.draw(st.integers(0, 10**6)))
    T = rng.standard_normal((V.shape[1],) * 2) + 1j * rng.standard_normal((V.shape[1],) * 2)
    T += 2 * np.eye(V.shape[1])
    g0 = eigengraph(s, sigma, eig)
    g1 = eigengraph_with_basis(s, V @ T)
    assert is_connected(g0).connected == is_connected(g1).connected
    for k in range(1, s.q + 1):
        for l in range(k + 1, s.q + 1):
            assert is_pair_connected(g0, k, l).connected == is_pair_connected(g1, k, l).connected


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 59))
def test_observability_gram_on_eigenvectors_is_a_scalar_multiple(idx):
    s = _instances()[idx][1]
    eig = eig_structure(s.A)
    for e in eig.entries:
        factor = sum(abs(e.mu) ** (2 * r) for r in range(s.n))
        for C in s.couplings.values():
            WV = observability_matrix(C, s.A) @ e.V
            lhs = WV.conj().T @ WV
            rhs = factor * (C @ e.V).conj().T @ (C @ e.V)
            assert np.linalg.norm(lhs - rhs) <= 1e-7 * max(np.linalg.norm(lhs), np.linalg.norm(rhs), 1e-300) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 59))
def test_disconnected_eigengraph_lifts_to_silent_unsynchronized_state(idx):
    s = _instances()[idx][1]
    eig = eig_structure(s.A)
    L = ArrayAnalysis(s).interconnection_view.L
    S = sync_basis(s.q, s.n) / np.sqrt(s.q)
    for sigma in range(1, eig.m + 1):
        c = is_connected(eigengraph(s, sigma, eig))
        if c.connected:
            continue
        zeta = np.kron(np.eye(s.q), eig[sigma].V) @ c.witness
        assert np.linalg.norm(L @ zeta) <= 1e-6 * max(1.0, np.linalg.norm(L, 2)) * np.linalg.norm(zeta)
        off = zeta - S @ (S.conj().T @ zeta)
        assert np.linalg.norm(off) > 0.1 * np.linalg.norm(zeta)


def test_counterexample_eigengraph_with_integer_basis_matches_laplacian():
    g = eigengraph_with_basis(ref.nilpotent_array(), ref.NILPOTENT_EIGENBASIS)
    np.testing.assert_allclose(laplacian(g).L, ref.NILPOTENT_EIGENGRAPH_LAPLACIAN, atol=1e-10)
