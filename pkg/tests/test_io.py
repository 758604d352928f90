import json

import numpy as np
import pytest

from kdilation import io
from kdilation.errors import GraphSpecError, InputError, ShapeMismatch
from kdilation.generators import fixture_family, fixture_file, fixture_graph, fixtures_dir, random_polynomial, rng_for
from kdilation.states import kernel_from_triple

FAMILY_FIXTURES = sorted(p.stem for p in (fixtures_dir() / "families").glob("*.json"))


@pytest.mark.parametrize(
    "value, z",
    [(2, 2 + 0j), (0.5, 0.5 + 0j), ([1, -2], 1 - 2j), ({"re": 3}, 3 + 0j), ({"re": 0, "im": 1.5}, 1.5j)],
)
def test_parse_complex_forms(value, z):
    assert io.parse_complex(value) == z


@pytest.mark.parametrize("value", [True, "1", [1, 2, 3], {"im": 1}, {"re": 1, "x": 2}, None])
def test_parse_complex_rejects(value):
    with pytest.raises(InputError):
        io.parse_complex(value)


def test_round_sig_and_dumps():
    assert io.round_sig(0.1 + 0.2) == 0.3
    assert io.round_sig(0.0) == 0.0
    assert io.round_sig(float("inf")) == float("inf")
    text = io.dumps({"b": np.float64(1 / 3), "a": np.array([1 + 1j]), "c": (np.int64(2), np.bool_(True))})
    assert json.loads(text) == {"a": [[1.0, 1.0]], "b": 0.333333333333, "c": [2, True]}
    assert text.index('"a"') < text.index('"b"')


def test_read_json_errors(tmp_path):
    with pytest.raises(InputError):
        io.read_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InputError):
        io.read_json(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[]")
    with pytest.raises(GraphSpecError):
        io.load_graph(arr)


@pytest.mark.parametrize("name", FAMILY_FIXTURES)
def test_family_round_trip(name):
    fam = fixture_family(name)
    again = io.family_from_dict(json.loads(json.dumps(io.family_to_dict(fam))))
    assert again.graph == fam.graph and dict(again.dims) == dict(fam.dims)
    for e in fam.graph.edges:
        assert np.array_equal(again.edge_matrix(e), fam.edge_matrix(e))


def test_family_file_key_checks():
    data = io.family_to_dict(fixture_family("g1_half"))
    data["extra"] = 1
    with pytest.raises(InputError):
        io.family_from_dict(data)
    data = io.family_to_dict(fixture_family("g1_half"))
    data["edges"] = []
    with pytest.raises(ShapeMismatch):
        io.family_from_dict(data)
    with pytest.raises(InputError):
        io.family_from_dict({"graph": 3, "dims": {}, "edges": {}})


def test_poly_round_trip():
    g = fixture_graph("flip_a")
    p = random_polynomial(g, rng_for(41))
    again = io.poly_from_json(json.loads(json.dumps(io.poly_to_json(p))), g)
    assert again.unit == pytest.approx(p.unit)
    assert [(m, n) for m, n, _ in again.terms] == [(m, n) for m, n, _ in p.terms]
    assert np.allclose([c for *_, c in again.terms], [c for *_, c in p.terms], rtol=1e-11)


def test_poly_formats():
    g = fixture_graph("g2")
    p = io.load_poly(fixture_file("polys", "g2_row.json"), g)
    assert [c for *_, c in p.terms] == [0.6, 0.8j]
    q = io.poly_from_json({"terms": [{"mu": "e1", "nu": "v", "coeff": 1}], "unit": 2}, g)
    assert q.unit == 2 and len(q.terms) == 1
    with pytest.raises(InputError):
        io.poly_from_json("x", g)
    with pytest.raises(InputError):
        io.poly_from_json([{"mu": "e1", "coeff": 1}], g)


def test_kernel_round_trip_and_symmetric_completion(tmp_path):
    t = io.load_triple(fixture_file("triples", "g2_row.json"))
    k = kernel_from_triple(t, 2)
    data = io.kernel_to_json(k, "../g2.json")
    again = io.kernel_from_json(data, fixture_file("kernels", "x.json"))
    assert np.max(np.abs(again.matrix - k.matrix)) <= 1e-11
    # the lower triangle may be omitted
    keep = {(s, i) for i, s in enumerate(k.symbols)}
    order = {("" if s is None else io.path_to_str(s)): i for s, i in keep}
    upper = [e for e in data["entries"] if order[e["lam"]] <= order[e["mu"]]]
    half = io.kernel_from_json({**data, "entries": upper}, fixture_file("kernels", "x.json"))
    assert np.max(np.abs(half.matrix - k.matrix)) <= 1e-11
    with pytest.raises(ShapeMismatch):
        io.kernel_from_json({**data, "entries": upper[1:]}, fixture_file("kernels", "x.json"))


def test_graph_field_can_be_supplied_by_caller(tmp_path):
    g = fixture_graph("g1")
    path = tmp_path / "pt.json"
    path.write_text(json.dumps({"vertex": "v", "alphas": {"e": [0.5, 0]}}))
    with pytest.raises(InputError):
        io.load_character(path)
    graph, vertex, alphas = io.load_character(path, g)
    assert graph is g and vertex == "v" and alphas == {"e": 0.5}
    kpath = tmp_path / "k.json"
    kpath.write_text(json.dumps({"cap": [0], "entries": [{"lam": "", "mu": "", "re": 1}, {"lam": "v", "mu": "v", "re": 1},
                                                          {"lam": "", "mu": "v", "re": 1}]}))
    k = io.load_kernel(kpath, g)
    assert np.array_equal(k.matrix, np.ones((2, 2)))


def test_shipped_files_load():
    for name in ("c3", "g2_row"):
        io.load_kernel(fixture_file("kernels", f"{name}.json"))
    for name in ("c3", "c3c3_mixed", "g1_unit", "g2_row"):
        assert io.load_triple(fixture_file("triples", f"{name}.json")).family.is_isometry
