import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from kdilation import family as fm
from kdilation.errors import RelationViolated, RowContractionViolated, ShapeMismatch, TailBoundExceeded
from kdilation.generators import (
    doubly_commuting_sq,
    fixture_family,
    fixture_graph,
    non_popescu_sq,
    random_complex,
    random_popescu_family,
    rng_for,
)


def g1_family(c):
    return fm.validate_family(fixture_graph("g1"), {"v": 1}, {"e": np.array([[c]])})


def test_c3_matrix_units_are_an_isometry():
    fam = fixture_family("c3")
    assert fam.is_isometry
    assert np.array_equal(fam.row_sum((1,)), np.eye(3))


@pytest.mark.parametrize("c, iso", [(0.0, False), (0.5, False), (0.6 + 0.8j, True), (1.0, True)])
def test_g1_scalars(c, iso):
    assert g1_family(c).is_isometry is iso


def test_g1_scalar_above_one_is_rejected():
    with pytest.raises(RowContractionViolated) as info:
        g1_family(1.1)
    assert info.value.witness["min_eig"] == pytest.approx(1 - 1.21)


def test_flip_square_violation():
    g = fixture_graph("flip_a")
    rng = rng_for(11)
    blocks = {n: 0.3 * random_complex(rng, 2, 2) for n in g.edges}
    with pytest.raises(RelationViolated) as info:
        fm.validate_family(g, {"v": 2}, blocks)
    assert info.value.witness["residual"] > 1e-3
    fam = fm.validate_family(g, {"v": 2}, blocks, strict=False)
    assert fam.square_residual == pytest.approx(info.value.witness["residual"])


def test_shape_errors():
    g = fixture_graph("g1")
    with pytest.raises(ShapeMismatch):
        fm.validate_family(g, {"v": 2}, {"e": np.eye(3)})
    with pytest.raises(ShapeMismatch):
        fm.validate_family(g, {"v": 1}, {})
    with pytest.raises(ShapeMismatch):
        fm.validate_family(g, {"v": 1, "w": 1}, {"e": np.eye(1)})


def test_extend_to_path():
    fam = g1_family(0.7j)
    g = fam.graph
    assert fm.extend_to_path(fam, g.path(["e", "e"]))[0, 0] == pytest.approx((0.7j) ** 2)
    sq = fixture_family("sq_doubly")
    ef = sq.graph.path(["e", "f"])
    ve, vf = sq.edge_matrix("e"), sq.edge_matrix("f")
    assert np.allclose(fm.extend_to_path(sq, ef), ve @ vf, atol=1e-10)
    assert np.allclose(ve @ vf, vf @ ve, atol=1e-10)
    c3 = fixture_family("c3")
    e20 = np.zeros((3, 3))
    e20[2, 0] = 1
    assert np.array_equal(fm.extend_to_path(c3, c3.graph.path(["a1", "a0"])), e20)


@pytest.mark.parametrize("name", ["c3", "c3c3", "g1_unit", "g2_row", "flip_a_row", "flip_a_iso2"])
def test_isometry_defect_closed_form(name):
    fam = fixture_family(name)
    for s in fm.DEFAULT_GRID:
        assert np.max(np.abs(fm.defect(fam, s) - (1 - s * s) ** fam.graph.rank * np.eye(fam.dim))) <= 1e-10
    rep = fm.popescu_check(fam)
    assert rep.popescu_pass and rep.rho_hat == fm.DEFAULT_GRID[0]
    expected = [(1 - s * s) ** fam.graph.rank for s in fm.DEFAULT_GRID]
    assert np.allclose(rep.min_eigs, expected, atol=1e-10)


def test_g1_scalar_defect():
    fam = g1_family(0.5 - 0.5j)
    for s in (0.3, 0.9):
        assert fm.defect(fam, s)[0, 0] == pytest.approx(1 - s * s * 0.5)


def test_doubly_commuting_product_formula():
    rng = rng_for(12)
    for _ in range(5):
        fam = doubly_commuting_sq(rng, 2)
        assert fm.is_doubly_commuting(fam)
        for s in fm.DEFAULT_GRID:
            assert np.max(np.abs(fm.defect(fam, s) - fm.product_defect(fam, s))) <= 1e-10
        assert fm.popescu_check(fam).popescu_pass


def test_non_doubly_commuting_detected():
    assert not fm.is_doubly_commuting(fixture_family("sq_nilpotent"))
    assert fm.doubly_commuting_residual(fixture_family("flip_a_row")) >= 0


def test_popescu_failure_carries_witness():
    rep = fm.popescu_check(non_popescu_sq(rng_for(13)))
    assert not rep.popescu_pass
    assert rep.witness["s"] == 0.99 and rep.witness["min_eig"] < 0
    rep = fm.popescu_check(fixture_family("sq_nilpotent"))
    assert not rep.popescu_pass and rep.rho_hat is None


def test_popescu_grid_validation():
    with pytest.raises(ValueError):
        fm.popescu_check(fixture_family("c3"), [0.5, 1.0])
    with pytest.raises(ValueError):
        fm.popescu_check(fixture_family("c3"), [])


def test_absorption_zero_family_is_exact():
    rep = fm.absorption_check(g1_family(0.0), 0.5, (6,))
    assert rep.error == 0.0 and rep.ok


def test_absorption_c3_within_bound():
    rep = fm.absorption_check(fixture_family("c3"), 0.5, (6,))
    assert rep.ok and rep.error <= rep.tail_bound + 1e-9
    assert rep.isometry_error <= rep.tail_bound + 1e-9


def test_absorption_random_flip_within_bound():
    fam = random_popescu_family(fixture_graph("flip_a"), rng_for(14))
    rep = fm.absorption_check(fam, 0.9, (4, 4))
    assert rep.ok and rep.error <= rep.tail_bound + 1e-9


def test_tail_bound_formula():
    # one colour: the bound is ||Delta|| times the geometric tail s^(2(cap+1)) / (1 - s^2)
    s, cap = 0.6, (3,)
    assert fm.absorption_tail_bound(2.0, s, cap) == pytest.approx(2.0 * s ** 8 / (1 - s * s))
    assert fm.absorption_tail_bound(1.0, 0.5, (50, 50)) == pytest.approx(0.0, abs=1e-12)


def test_absorption_bound_is_enforced():
    # a tail bound of zero with a nonzero tail must raise
    fam = g1_family(0.9)
    rep = fm.absorption_check(fam, 0.9, (2,), raise_on_failure=False)
    assert rep.ok
    original = fm.absorption_tail_bound
    try:
        fm.absorption_tail_bound = lambda *a: 0.0
        with pytest.raises(TailBoundExceeded):
            fm.absorption_check(fam, 0.9, (2,))
    finally:
        fm.absorption_tail_bound = original


GRAPHS = ("g1", "g2", "sq", "c3", "flip_a", "flip_b", "n3", "two")


@settings(max_examples=40, deadline=None)
@given(hs.sampled_from(GRAPHS), hs.integers(0, 2**32 - 1), hs.sampled_from([0.5, 0.9]))
def test_random_popescu_families(name, seed, s):
    g = fixture_graph(name)
    fam = random_popescu_family(g, np.random.default_rng(seed))
    assert fm.popescu_check(fam).popescu_pass
    rep = fm.absorption_check(fam, s, (3,) * g.rank, raise_on_failure=False)
    assert rep.error <= rep.tail_bound + 1e-9
