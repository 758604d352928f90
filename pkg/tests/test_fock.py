import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from kdilation import fock
from kdilation import kgraph as kg
from kdilation.errors import CapTooSmall, NotUnimodular
from kdilation.generators import GRAPH_FIXTURES, fixture_graph
from kdilation.polynomial import PolySpec


def test_g1_creation_is_truncated_shift():
    g = fixture_graph("g1")
    b = fock.FockBasis.build(g, 3)
    assert [p.length for p in b.paths] == [0, 1, 2, 3]
    expected = np.diag(np.ones(3), -1)
    assert np.array_equal(fock.creation(b, g.edge("e")).toarray(), expected)


@pytest.mark.parametrize("name", GRAPH_FIXTURES)
def test_vertex_creation_is_range_projection(name):
    g = fixture_graph(name)
    b = fock.FockBasis.build(g, (1,) * g.rank)
    for v in g.vertices:
        m = fock.creation(b, g.vertex(v)).toarray()
        assert np.array_equal(m, np.diag([1.0 if p.range == v else 0.0 for p in b.paths]))


def test_c3_nonzero_count_matches_enumeration():
    g = fixture_graph("c3")
    b = fock.FockBasis.build(g, 2)
    op = fock.creation(b, g.edge("a0"))
    oracle = [mu for mu in g.paths_upto((1,)) if mu.range == "v0"]
    assert op.nnz == len(oracle)


@pytest.mark.parametrize("name", GRAPH_FIXTURES)
def test_tck_relations_exact_on_interior(name):
    g = fixture_graph(name)
    rep = fock.tck_check(fock.FockBasis.build(g, (3,) * g.rank))
    assert rep.max_residual() == 0.0
    assert set(rep.residuals) == {"i", "ii", "iii", "iv", "v"}
    assert all(rep.checked[k] > 0 for k in rep.residuals)


def test_sq_relation_v_reduces_to_commutation():
    g = fixture_graph("sq")
    b = fock.FockBasis.build(g, (2, 2))
    le = fock.creation(b, g.edge("e")).toarray()
    lf = fock.creation(b, g.edge("f")).toarray()
    mask = b.interior((1, 1))
    assert np.array_equal((le.T @ lf)[:, mask], (lf @ le.T)[:, mask])


def test_c3_relation_iv_is_strict_on_fock_space():
    # sum_{lam in Lambda^1_a} L L^* misses the vacuum at a, so the defect is P_{vacuum at a}
    g = fixture_graph("c3")
    b = fock.FockBasis.build(g, 3)
    rep = fock.tck_check(b)
    assert rep.residuals["iv"] == 0.0
    assert rep.notes["iv_defect_identity"] == 0.0
    assert rep.notes["iv_equality_gap"] == 1.0
    a = g.vertex("v0")
    lam = [p for p in g.paths((1,)) if p.range == "v0"][0]
    pa = fock.creation(b, a).toarray()
    ll = fock.creation(b, lam).toarray()
    defect = pa - ll @ ll.T
    vac = np.zeros(len(b))
    vac[b.index[a]] = 1
    assert np.array_equal(defect[:, b.interior((1,))], np.outer(vac, vac)[:, b.interior((1,))])


def test_vacuum_projection_examples():
    g1 = fixture_graph("g1")
    b = fock.FockBasis.build(g1, 3)
    assert np.array_equal(fock.vacuum_projection(b, 1).toarray(), np.diag([1.0, 0, 0, 0]))
    sq = fixture_graph("sq")
    b = fock.FockBasis.build(sq, (1, 1))
    kept = {str(b.paths[i]) for i in np.flatnonzero(np.diag(fock.vacuum_projection(b, 1).toarray()))}
    assert kept == {"v", "f"}


@pytest.mark.parametrize("name", GRAPH_FIXTURES)
def test_vacuum_identity_on_interior(name):
    g = fixture_graph(name)
    b = fock.FockBasis.build(g, (3,) * g.rank)
    for j in range(1, g.rank + 1):
        assert fock.vacuum_identity_residual(b, j) == 0.0


def test_gauge_examples():
    g1 = fixture_graph("g1")
    b = fock.FockBasis.build(g1, 2)
    assert np.array_equal(fock.gauge_unitary(b, [1.0]).toarray(), np.eye(3))
    assert np.array_equal(fock.gauge_unitary(b, [-1.0]).toarray(), np.diag([1.0, -1.0, 1.0]))
    sq = fixture_graph("sq")
    b = fock.FockBasis.build(sq, (2, 2))
    u = fock.gauge_unitary(b, [1j, -1.0]).toarray()
    le = fock.creation(b, sq.edge("e")).toarray()
    assert np.array_equal(u @ le @ u.conj().T, 1j * le)
    with pytest.raises(NotUnimodular):
        fock.gauge_unitary(b, [1.0, 0.5])
    with pytest.raises(NotUnimodular):
        fock.gauge_unitary(b, [1.0])


FOCK_GRAPHS = {name: fixture_graph(name) for name in GRAPH_FIXTURES}


@settings(max_examples=60, deadline=None)
@given(hs.sampled_from(GRAPH_FIXTURES), hs.data())
def test_gauge_covariance_random_phases(name, data):
    g = FOCK_GRAPHS[name]
    b = fock.FockBasis.build(g, (2,) * g.rank)
    angles = data.draw(hs.lists(hs.floats(0, 2 * np.pi), min_size=g.rank, max_size=g.rank))
    z = np.exp(1j * np.array(angles))
    lam = data.draw(hs.sampled_from(g.paths_upto((1,) * g.rank)))
    assert fock.gauge_covariance_residual(b, lam, z) <= 1e-14


@settings(max_examples=60, deadline=None)
@given(hs.sampled_from(GRAPH_FIXTURES), hs.data())
def test_creation_is_multiplicative_on_interior(name, data):
    g = FOCK_GRAPHS[name]
    b = fock.FockBasis.build(g, (3,) * g.rank)
    small = g.paths_upto((1,) * g.rank)
    lam = data.draw(hs.sampled_from(small))
    mu = data.draw(hs.sampled_from(small))
    product = fock.creation(b, lam).toarray() @ fock.creation(b, mu).toarray()
    ext = g.try_compose(lam, mu)
    target = np.zeros_like(product) if ext is None else fock.creation(b, ext).toarray()
    mask = b.interior(kg.add(lam.degree, mu.degree))
    assert np.array_equal(product[:, mask], target[:, mask])


# -- polynomials and restricted norms ------------------------------------------


def test_restricted_norm_of_edge_on_g1():
    g = fixture_graph("g1")
    p = PolySpec.monomial(g, g.edge("e"))
    for n in range(5):
        assert fock.restricted_norm(fock.FockBasis.build(g, n), p) == pytest.approx(1.0, abs=1e-12)


def test_restricted_norm_of_row_on_g2():
    g = fixture_graph("g2")
    gam = [0.3 + 0.4j, -1.2]
    p = PolySpec.build(g, [(g.edge("e1"), g.vertex("v"), gam[0]), (g.edge("e2"), g.vertex("v"), gam[1])])
    exact = np.sqrt(sum(abs(c) ** 2 for c in gam))
    assert fock.exact_fock_norm(p) == pytest.approx(exact, abs=1e-15)
    for n in range(4):
        assert fock.restricted_norm(fock.FockBasis.build(g, n), p) == pytest.approx(exact, abs=1e-12)


def test_range_projection_norm():
    g = fixture_graph("g1")
    e = g.edge("e")
    p = PolySpec.monomial(g, e, e)
    assert fock.restricted_norm(fock.FockBasis.build(g, 3), p) == pytest.approx(1.0, abs=1e-12)
    assert fock.exact_fock_norm(p) == 1.0


def test_polynomial_matrix_needs_room():
    g = fixture_graph("g1")
    p = PolySpec.monomial(g, g.edge("e"))
    b = fock.FockBasis.build(g, 2)
    with pytest.raises(CapTooSmall):
        fock.polynomial_matrix(b, p, b)
    with pytest.raises(CapTooSmall):
        fock.restricted_norm(b, p, out_cap=2)


def test_polynomial_matrix_matches_operator_products():
    g = fixture_graph("flip_a")
    b_in = fock.FockBasis.build(g, (1, 1))
    b_out = fock.FockBasis.build(g, (2, 2))
    big = fock.FockBasis.build(g, (2, 2))
    mu, nu = g.edge("e1"), g.edge("f2")
    # L_mu L_nu^* acts on delta_xi by stripping nu then prefixing mu
    p = PolySpec.build(g, [(mu, nu, 2.0 - 1j)])
    got = fock.polynomial_matrix(b_in, p, b_out).toarray()
    lm = fock.creation(big, mu).toarray()
    ln = fock.creation(big, nu).toarray()
    ref = (2.0 - 1j) * (lm @ ln.conj().T)
    cols = [big.index[x] for x in b_in.paths]
    assert np.array_equal(got, ref[:, cols])


@settings(max_examples=40, deadline=None)
@given(hs.sampled_from(("g1", "g2", "c3", "sq", "flip_b")), hs.integers(0, 2**32 - 1))
def test_restricted_norms_are_nondecreasing(name, seed):
    from kdilation.generators import random_polynomial

    g = FOCK_GRAPHS[name]
    p = random_polynomial(g, np.random.default_rng(seed), max_length=2)
    top = 3 if g.rank == 1 else 2
    bounds = [fock.restricted_norm(fock.FockBasis.build(g, (n,) * g.rank), p) for n in range(top + 1)]
    assert all(b >= a - 1e-12 for a, b in zip(bounds, bounds[1:]))
    exact = fock.exact_fock_norm(p)
    if exact is not None:
        assert bounds[-1] <= exact + 1e-12
