import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arrayobs import reference as ref
from arrayobs.decisions import ArrayAnalysis
from arrayobs.ngraph import (
    NGraph,
    difference_operator,
    effective_conductance,
    graph_from_matrices,
    is_connected,
    is_pair_connected,
    laplacian,
    laplacian_matrix,
    make_ngraph,
    sync_basis,
    to_dot,
)
from arrayobs.numerics import DEFAULT_TOL, ValidationError, numerical_rank
from arrayobs.spectral import eigengraph_with_basis
from helpers import psd_graphs, union_find_components


def nilpotent_eigengraph():
    return eigengraph_with_basis(ref.nilpotent_array(), ref.NILPOTENT_EIGENBASIS)


# ------------------------------------------------------------ construction


def test_graph_from_identity_matrix():
    g = graph_from_matrices({(1, 2): np.eye(3)}, 2, 3)
    np.testing.assert_array_equal(g.weight(1, 2), np.eye(3))
    np.testing.assert_array_equal(g.weight(2, 1), np.eye(3))
    assert not np.any(g.weight(1, 1))


def test_graph_from_observability_matrices_is_interconnection_graph():
    s = ref.six_state_array()
    an = ArrayAnalysis(s)
    for p, W in an.observability.W.items():
        np.testing.assert_allclose(an.interconnection.weight(*p), W.conj().T @ W)


def test_make_ngraph_rejects_non_psd_and_non_hermitian():
    with pytest.raises(ValidationError):
        make_ngraph({(1, 2): np.array([[-1.0]])}, 2, 1)
    with pytest.raises(ValidationError):
        make_ngraph({(1, 2): np.array([[1.0, 1.0], [0.0, 1.0]])}, 2, 2)
    with pytest.raises(ValidationError):
        make_ngraph({(1, 2): np.eye(3)}, 2, 2)


# --------------------------------------------------------------- laplacian


def test_two_vertex_laplacian_blocks():
    G = np.array([[2.0, 1.0], [1.0, 1.0]])
    L = laplacian(make_ngraph({(1, 2): G}, 2, 2)).L
    np.testing.assert_array_equal(L, np.block([[G, -G], [-G, G]]))


def test_counterexample_eigengraph_laplacian_is_integer_matrix():
    L = laplacian(nilpotent_eigengraph()).L
    np.testing.assert_allclose(L, ref.NILPOTENT_EIGENGRAPH_LAPLACIAN, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 199))
def test_laplacian_annihilates_sync_subspace_and_is_psd(idx):
    g = dict(psd_graphs(idx + 1))[idx]
    view = laplacian(g)
    L = view.L
    scale = max(np.linalg.norm(L, 2), 1.0)
    assert np.linalg.norm(L @ sync_basis(g.q, g.n)) <= 1e-12 * scale
    np.testing.assert_allclose(L, L.conj().T, atol=1e-12 * scale)
    assert view.eigenvalues[0] >= -DEFAULT_TOL.psd_slack * scale


# ---------------------------------------------------------- connectivity


def test_zero_weights_are_disconnected():
    g = make_ngraph({}, 2, 2)
    c = is_connected(g)
    assert not c.connected
    assert np.linalg.norm(sync_basis(2, 2).T @ c.witness) < 1e-12


def test_counterexample_eigengraph_is_disconnected_but_23_connected():
    g = nilpotent_eigengraph()
    view = laplacian(g)
    assert view.null_basis.shape[1] == 3
    assert not is_connected(g).connected
    D = difference_operator(3, 2, 2, 3)
    assert np.linalg.norm(D.T @ view.null_basis) < 1e-12
    assert is_pair_connected(g, 2, 3).connected
    assert not is_pair_connected(g, 1, 2).connected


def test_connected_graph_is_connected_for_every_pair():
    g = make_ngraph({(1, 2): np.eye(2), (2, 3): np.eye(2)}, 3, 2)
    assert is_connected(g)
    for k, l in ((1, 2), (1, 3), (2, 3)):
        assert is_pair_connected(g, k, l)


def test_isolated_vertices_are_not_pair_connected():
    g = make_ngraph({}, 2, 1)
    res = is_pair_connected(g, 1, 2)
    assert not res.connected
    assert abs(res.witness[0] - res.witness[1]) > 0.1


def test_pair_connected_rejects_equal_vertices():
    with pytest.raises(ValidationError):
        is_pair_connected(make_ngraph({}, 3, 1), 2, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 199))
def test_connected_iff_null_space_is_sync_subspace(idx):
    g = dict(psd_graphs(idx + 1))[idx]
    view = laplacian(g)
    N = view.null_basis
    S = sync_basis(g.q, g.n) / np.sqrt(g.q)
    # S is always inside null L; equality means N has no extra directions
    assert np.linalg.norm(S - N @ (N.conj().T @ S)) < 1e-6
    spans_equal = N.shape[1] == g.n
    assert is_connected(g, view=view).connected == spans_equal


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7), st.lists(st.tuples(st.integers(1, 7), st.integers(1, 7), st.floats(0.1, 5.0)), max_size=12))
def test_scalar_connectivity_matches_union_find(q, edges):
    weights = {}
    for i, j, w in edges:
        if i != j and i <= q and j <= q:
            weights[(min(i, j), max(i, j))] = np.array([[w]])
    g = make_ngraph(weights, q, 1)
    assert is_connected(g).connected == (union_find_components(q, weights) == 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 199), st.data())
def test_deleting_an_edge_never_connects(idx, data):
    g = dict(psd_graphs(idx + 1))[idx]
    if not g.weights:
        return
    pair = data.draw(st.sampled_from(sorted(g.weights)))
    smaller = make_ngraph({p: G for p, G in g.weights.items() if p != pair}, g.q, g.n)
    lam = laplacian(g).eigenvalues
    lam_small = laplacian(smaller).eigenvalues
    assert lam_small[g.n] <= lam[g.n] + 1e-9 * max(lam[-1], 1.0)
    if not is_connected(g):
        assert not is_connected(smaller)


# --------------------------------------------------- effective conductance


def test_two_vertex_conductance_is_the_weight():
    G = np.array([[2.0, 1.0j], [-1.0j, 1.0]])
    g = make_ngraph({(1, 2): G}, 2, 2)
    ec = effective_conductance(g, 1, 2)
    np.testing.assert_array_equal(ec.gamma, G)
    np.testing.assert_array_equal(ec.potentials[0], np.eye(2))
    assert not np.any(ec.potentials[1])


def test_scalar_path_series_conductance():
    an = ArrayAnalysis(ref.scalar_path_array())
    # oracle: ground node 3, hold node 1 at one volt, solve for node 2 by hand: v2 = 1/2
    v2 = 1.0 / 2.0
    current = 1.0 * (1.0 - v2)
    ec = an.conductance(1, 3)
    assert abs(ec.gamma[0, 0] - current) < 1e-12
    assert abs(ec.potentials[1][0, 0] - v2) < 1e-12


def test_counterexample_conductance_is_rank_deficient():
    an = ArrayAnalysis(ref.nilpotent_array())
    ec = an.conductance(2, 3)
    assert numerical_rank(ec.gamma, scale=an.laplacian_scale) < 4
    assert not is_pair_connected(an.interconnection, 2, 3).connected


def test_conductance_across_components_is_exactly_zero():
    rng = np.random.default_rng(5)
    H = rng.standard_normal((3, 3))
    G = H @ H.T + 1e-4 * np.eye(3)
    g = make_ngraph({(1, 3): G, (3, 4): 2 * G}, 5, 3)
    for k, l in ((1, 2), (2, 1), (1, 5), (5, 4)):
        ec = effective_conductance(g, k, l)
        assert not np.any(ec.gamma)
        # k's component sits at the identity, everything else at zero
        comp = {1: {1, 3, 4}, 2: {2}, 5: {5}}[k]
        for i in range(1, 6):
            expected = np.eye(3) if i in comp else np.zeros((3, 3))
            np.testing.assert_array_equal(ec.potentials[i - 1], expected)
    # the isolated vertex does not perturb a pair inside the component
    ec = effective_conductance(g, 1, 4)
    np.testing.assert_allclose(ec.gamma, np.linalg.inv(np.linalg.inv(G) + np.linalg.inv(2 * G)), rtol=1e-9)


def test_conductance_rejects_equal_vertices():
    with pytest.raises(ValidationError):
        effective_conductance(make_ngraph({}, 3, 1), 1, 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 199), st.data())
def test_conductance_properties(idx, data):
    g = dict(psd_graphs(idx + 1))[idx]
    k = data.draw(st.integers(1, g.q))
    l = data.draw(st.integers(1, g.q).filter(lambda v: v != k))
    ec = effective_conductance(g, k, l)
    G = ec.gamma
    L = laplacian_matrix(g)
    normL = np.linalg.norm(L, 2)
    gnorm = np.linalg.norm(G, 2)
    # defining equation with boundary values
    np.testing.assert_array_equal(ec.potentials[k - 1], np.eye(g.n))
    assert not np.any(ec.potentials[l - 1])
    rhs = difference_operator(g.q, g.n, k, l) @ G
    assert np.linalg.norm(L @ ec.stacked_potentials() - rhs, 2) <= 1e-8 * max(normL, 1e-300)
    # Hermitian, PSD, reciprocal
    np.testing.assert_allclose(G, G.conj().T, atol=1e-12 * max(gnorm, 1.0))
    assert np.min(np.linalg.eigvalsh(G)) >= -1e-8 * gnorm
    back = effective_conductance(g, l, k).gamma
    assert np.linalg.norm(G - back) <= 1e-8 * gnorm + 1e-12
    # full rank exactly when the pair is connected
    full = numerical_rank(G, scale=normL) == g.n
    assert full == is_pair_connected(g, k, l).connected


# ------------------------------------------------------------------- DOT


def test_dot_export_of_scalar_graph():
    g = make_ngraph({(1, 2): np.array([[2.0]]), (2, 3): np.array([[0.0]])}, 3, 1)
    text = to_dot(g, "demo")
    assert text.startswith("graph demo {")
    assert 'v1 -- v2 [weight="2"];' in text
    assert "v2 -- v3" not in text
    assert "  v3;" in text


def test_dot_export_refuses_matrix_weights():
    with pytest.raises(ValidationError):
        to_dot(make_ngraph({}, 2, 2))


def test_noise_only_graph_is_not_connected_when_scale_is_known():
    weights = {(1, 2): np.array([[1e-33]])}
    plain = NGraph(2, 1, weights)
    scaled = NGraph(2, 1, weights, scale=1.0)
    assert is_connected(plain).connected
    assert not is_connected(scaled).connected
