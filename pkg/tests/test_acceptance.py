"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records one ``CRITERION n: PASS|FAIL ...`` line; the lines are
printed in the terminal summary by ``conftest.py`` and on stdout when this
file is run as a script.
"""

from __future__ import annotations

import itertools
import time

import numpy as np

from kdilation import characters as ch
from kdilation import dilation as dl
from kdilation import family as fm
from kdilation import fock
from kdilation import io
from kdilation import kgraph as kg
from kdilation import poisson as ps
from kdilation import states as st
from kdilation.generators import (
    doubly_commuting_sq,
    fixture_family,
    fixture_file,
    fixture_graph,
    random_cuntz_pimsner_cycle,
    random_flip_character,
    random_polynomial,
    random_popescu_family,
    random_row_polynomial,
    random_word,
    rng_for,
)
from kdilation.linalg import hermitian_eig, operator_norm

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

SEED = 20240601
GRID = fm.DEFAULT_GRID
COMBINATORIAL_GRAPHS = ("g1", "g2", "sq", "c3", "flip_a", "flip_b", "n3")
ALL_GRAPHS = COMBINATORIAL_GRAPHS + ("two",)
ISOMETRY_FAMILIES = ("c3", "c3c3", "c3c3_twisted", "g1_unit", "g2_row", "flip_a_row", "flip_a_iso2")
POPESCU_FAMILIES = ISOMETRY_FAMILIES + ("g1_zero", "g1_half", "sq_doubly", "n3_diag", "two_edge")
TRIPLES = ("g2_row", "c3", "c3c3_mixed", "g1_unit")


def record(number: int, ok: bool, detail: str, started: float) -> None:
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - started:.1f}s) {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def is_cuntz_pimsner(fam: fm.OperatorFamily, tol: float = 1e-9) -> bool:
    """Row-isometric with every edge operator an isometry on its source block."""
    if not fam.is_isometry:
        return False
    g = fam.graph
    for name in g.edges:
        e = g.edge(name)
        w = fam.op(e)
        if np.max(np.abs(w.conj().T @ w - fam.op(g.vertex(e.source)))) > tol:
            return False
    return True


# ---------------------------------------------------------------------------


def test_criterion_1_graph_combinatorics():
    t0 = time.perf_counter()
    failures = []
    counted = 0
    for name in COMBINATORIAL_GRAPHS:
        g = fixture_graph(name)
        cap = (2,) * g.rank
        for lam in g.paths_upto(cap):
            for m in kg.box(lam.degree):
                head, tail = g.factorize(lam, m)
                counted += 1
                if head.degree != m or tail.degree != kg.subtract(lam.degree, m) or g.compose(head, tail) != lam:
                    failures.append(f"{name}:{lam}@{m}")
        small = g.paths_upto(kg.ones(g.rank))
        for lam, mu in itertools.product(small, small):
            forward = sorted(str(nu) for nu, _, _ in g.mce(lam, mu))
            backward = sorted(str(nu) for nu, _, _ in g.mce(mu, lam))
            if forward != backward:
                failures.append(f"{name}:mce({lam},{mu})")
            for nu, alpha, beta in g.mce(lam, mu):
                if g.compose(lam, alpha) != nu or g.compose(mu, beta) != nu:
                    failures.append(f"{name}:mce witness {nu}")
    sizes = {
        "sq": len(fixture_graph("sq").paths((1, 1))),
        "flip_a": len(fixture_graph("flip_a").paths((1, 1))),
        "flip_b": len(fixture_graph("flip_b").paths((1, 1))),
    }
    if sizes != {"sq": 1, "flip_a": 4, "flip_b": 4}:
        failures.append(f"sizes {sizes}")
    ok = not failures
    record(1, ok, f"{counted} factorizations, |Lambda^(1,1)| = {sizes}, failures {failures[:3]}", t0)
    assert ok, failures[:10]


def test_criterion_2_fock_relations():
    t0 = time.perf_counter()
    worst = {"tck": 0.0, "vacuum": 0.0, "gauge": 0.0}
    roots = [1.0, -1.0, 1j, -1j]
    for name in ALL_GRAPHS:
        g = fixture_graph(name)
        b = fock.FockBasis.build(g, (3,) * g.rank)
        worst["tck"] = max(worst["tck"], fock.tck_check(b).max_residual())
        for j in range(1, g.rank + 1):
            worst["vacuum"] = max(worst["vacuum"], fock.vacuum_identity_residual(b, j))
        for z in itertools.product(roots, repeat=g.rank):
            for lam in g.paths_upto(kg.ones(g.rank)):
                worst["gauge"] = max(worst["gauge"], fock.gauge_covariance_residual(b, lam, z))
    ok = all(v == 0.0 for v in worst.values())
    record(2, ok, f"residuals {worst}", t0)
    assert ok, worst


def test_criterion_3_defect_and_absorption():
    t0 = time.perf_counter()
    iso_err = 0.0
    for name in ISOMETRY_FAMILIES:
        fam = fixture_family(name)
        assert fam.is_isometry, name
        for s in GRID:
            target = (1 - s * s) ** fam.graph.rank * np.eye(fam.dim)
            iso_err = max(iso_err, float(np.max(np.abs(fm.defect(fam, s) - target))))
    rng = rng_for(SEED, 3)
    doubly = [fixture_family("sq_doubly"), fixture_family("n3_diag")] + [doubly_commuting_sq(rng, 2) for _ in range(5)]
    prod_err = 0.0
    for fam in doubly:
        assert fm.is_doubly_commuting(fam)
        for s in GRID:
            prod_err = max(prod_err, float(np.max(np.abs(fm.defect(fam, s) - fm.product_defect(fam, s)))))
    excess = -np.inf
    for name in POPESCU_FAMILIES:
        fam = fixture_family(name)
        for s in (0.5, 0.9):
            rep = fm.absorption_check(fam, s, (6,) * fam.graph.rank, raise_on_failure=False)
            excess = max(excess, rep.error - (rep.tail_bound + 1e-9))
            if rep.isometry_error is not None:
                excess = max(excess, rep.isometry_error - (rep.tail_bound + 1e-9))
    ok = iso_err <= 1e-10 and prod_err <= 1e-10 and excess <= 0
    record(3, ok, f"isometry defect err {iso_err:.2e}, product err {prod_err:.2e}, worst excess over tail bound {excess:.2e}", t0)
    assert ok


def test_criterion_4_von_neumann():
    t0 = time.perf_counter()
    rng = rng_for(SEED, 4)
    verdicts = {"PASS": 0, "CONSISTENT": 0, "VIOLATION": 0}
    monotone_drop = 0.0
    for k in range(200):
        g = fixture_graph(ALL_GRAPHS[k % len(ALL_GRAPHS)])
        fam = random_popescu_family(g, rng)
        p = random_polynomial(g, rng, max_length=2)
        n_max = (4,) * g.rank if g.rank == 1 else (2,) * g.rank
        rep = ps.vn_report(fam, p, n_max)
        verdicts[rep.verdict] += 1
        for a, b in zip(rep.lower_bounds, rep.lower_bounds[1:]):
            monotone_drop = max(monotone_drop, a - b)
    row_excess = -np.inf
    for k in range(40):
        g = fixture_graph(ALL_GRAPHS[k % len(ALL_GRAPHS)])
        fam = random_popescu_family(g, rng)
        color = int(rng.integers(1, g.rank + 1))
        p = random_row_polynomial(g, rng, color)
        bound = float(np.sqrt(sum(abs(c) ** 2 for _, _, c in p.terms)))
        norm = operator_norm(ps.poisson_apply(fam, p))
        row_excess = max(row_excess, norm - (bound * (1 + 1e-9) + 1e-9))
    ok = verdicts["VIOLATION"] == 0 and row_excess <= 0 and monotone_drop <= 1e-12
    record(4, ok, f"verdicts {verdicts}, row excess {row_excess:.2e}, worst monotonicity drop {monotone_drop:.2e}", t0)
    assert ok


def test_criterion_4_monotonicity_rank_two():
    t0 = time.perf_counter()
    rng = rng_for(SEED, 41)
    drop = 0.0
    for name in ("sq", "flip_a", "flip_b"):
        g = fixture_graph(name)
        for _ in range(2):
            p = random_polynomial(g, rng, max_length=2)
            bounds = [fock.restricted_norm(fock.FockBasis.build(g, (n, n)), p) for n in range(5)]
            drop = max(drop, max(a - b for a, b in zip(bounds, bounds[1:])))
    ok = drop <= 1e-12
    record(4, ok, f"rank-2 restricted norms nondecreasing for N = 0..4, worst drop {drop:.2e}", t0)
    assert ok


def test_criterion_5_dilation():
    t0 = time.perf_counter()
    rng = rng_for(SEED, 5)
    rank_le_two = ("g1", "g2", "sq", "c3", "flip_a", "flip_b", "two")
    compression = 0.0
    for k in range(50):
        g = fixture_graph(rank_le_two[k % len(rank_le_two)])
        fam = random_popescu_family(g, rng)
        cap = (3,) if g.rank == 1 else (2, 2)
        space = dl.build_dilation(fam, cap)
        compression = max(compression, dl.compression_residual(space))
    fullness = 0.0
    for name in ISOMETRY_FAMILIES:
        fam = fixture_family(name)
        cap = (3,) if fam.graph.rank == 1 else (2, 2)
        fullness = max(fullness, dl.verify_cuntz_pimsner(dl.build_dilation(fam, cap)).residuals["fullness"])
    idem = []
    cp_inputs = [fixture_family(n) for n in ("c3", "c3c3", "c3c3_twisted", "g1_unit")]
    cp_inputs += [random_cuntz_pimsner_cycle(rng) for _ in range(10)]
    for fam in cp_inputs:
        assert is_cuntz_pimsner(fam)
        space = dl.build_dilation(fam, (2,) * fam.graph.rank)
        idem.append(space.rank == fam.dim)
    ok = compression <= 1e-9 and fullness <= 1e-9 and all(idem)
    record(5, ok, f"compression {compression:.2e}, fullness {fullness:.2e}, idempotent {sum(idem)}/{len(idem)}", t0)
    assert ok


def test_criterion_6_fixed_points_and_commutants():
    t0 = time.perf_counter()
    rng = rng_for(SEED, 6)
    fams = [fixture_family(n) for n in ("c3", "c3c3", "g1_unit")] + [random_cuntz_pimsner_cycle(rng) for _ in range(20)]
    mismatches = []
    for k, fam in enumerate(fams):
        fix = st.fix_space(fam, paranoid=True)
        comm = len(dl.commutant(fam))
        if fix.dim != comm or fix.paranoid_dim != fix.dim:
            mismatches.append((k, fix.dim, fix.paranoid_dim, comm))
    dims = [st.fix_space(f).dim for f in fams[:3]]
    ok = not mismatches and dims == [1, 4, 1]
    record(6, ok, f"{len(fams)} families, fixed dims {dims} on C3, C3+C3, G1, mismatches {mismatches}", t0)
    assert ok


def test_criterion_7_states():
    t0 = time.perf_counter()
    inv = 0.0
    roundtrip = 0.0
    for name in TRIPLES:
        triple = io.load_triple(fixture_file("triples", f"{name}.json"))
        k = st.kernel_from_triple(triple, (3,) * triple.family.graph.rank)
        inv = max(inv, st.invariance_residual(k)[0])
        roundtrip = max(roundtrip, st.kolmogorov_reconstruct(k).roundtrip_error)
    verdicts = {
        name: st.purity_check(io.load_triple(fixture_file("triples", f"{name}.json"))).verdict
        for name in ("g2_row", "c3c3_mixed", "c3")
    }
    expected = {"g2_row": "PURE", "c3c3_mixed": "NOT PURE", "c3": "PURE"}
    c3 = fixture_family("c3")
    comp = st.gns_compress(c3, np.array([1.0, 0.0, 0.0]))
    exact = comp.triple.family.dims == c3.dims and all(
        np.array_equal(comp.triple.family.blocks[n], c3.blocks[n]) for n in c3.blocks
    )
    ok = inv <= 1e-10 and roundtrip <= 1e-8 and verdicts == expected and exact
    record(7, ok, f"invariance {inv:.2e}, round trip {roundtrip:.2e}, purity {verdicts}, gns exact {exact}", t0)
    assert ok


def test_criterion_8_characters_and_derivations():
    t0 = time.perf_counter()
    rng = rng_for(SEED, 8)
    g = fixture_graph("flip_a")
    gens = [g.vertex(v) for v in g.vertices] + [g.edge(e) for e in g.edges]
    mult = 0.0
    for _ in range(50):
        point = ch.validate_character(g, "v", random_flip_character(rng))
        for length in range(4):
            for word in itertools.product(gens, repeat=length):
                value = ch.char_eval(point, ch.word_poly(g, list(word)))
                product = np.prod([point.path_value(x) for x in word]) if word else 1.0
                mult = max(mult, abs(value - product))
    wo_reports = [
        ch.wo_continuity_check(ch.validate_character(*io.load_character(fixture_file("characters", "g1_half.json"))), 20),
        ch.wo_continuity_check(ch.validate_character(*io.load_character(fixture_file("characters", "flip_a_point.json"))), 20),
        ch.wo_continuity_check(ch.validate_character(*io.load_character(fixture_file("characters", "flip_a_point.json"))), 6),
    ]
    kappas_ok = all(all(abs(k - 0.25) < 1e-15 for k in r.kappa) for r in wo_reports)
    wo_ok = all(r.ok for r in wo_reports) and wo_reports[0].explicit and wo_reports[2].explicit
    two = fixture_graph("two")
    d = ch.validate_derivation(two, "a", "b", complex(*rng.standard_normal(2)), {"g": complex(*rng.standard_normal(2))})
    leibniz = 0.0
    words = [two.vertex("a"), two.vertex("b"), two.edge("g")]
    for _ in range(100):
        x = random_word(two, rng, 3, words) or [words[int(rng.integers(3))]]
        y = random_word(two, rng, 3, words) or [words[int(rng.integers(3))]]
        leibniz = max(leibniz, _leibniz_residual(d, x, y))
    h1 = (ch.h1_dimension(two, "a", "b"), ch.h1_dimension(two, "b", "a"))
    ok = mult <= 1e-12 and kappas_ok and wo_ok and leibniz <= 1e-12 and h1 == (1, 0)
    record(8, ok, f"multiplicativity {mult:.2e}, wo ok {wo_ok}, Leibniz {leibniz:.2e}, h1 {h1}", t0)
    assert ok


def _leibniz_residual(d, x, y) -> float:
    def delta(word):
        lam = ch.word_path(d.graph, word)
        return 0.0 if lam is None else ch.derivation_linear(d, lam)

    lhs = delta(list(x) + list(y))
    rhs = ch.module_character(d.a, x) * delta(y) + delta(x) * ch.module_character(d.b, y)
    return abs(lhs - rhs)


def test_criterion_9_kernel_numerics():
    t0 = time.perf_counter()
    rng = rng_for(SEED, 9)
    recon = 0.0
    eig_gap = 0.0
    norm_err = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 41))
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = 0.5 * (a + a.conj().T)
        w, u = hermitian_eig(h)
        recon = max(recon, float(np.max(np.abs(h - (u * w) @ u.conj().T))))
        eig_gap = max(eig_gap, float(np.max(np.abs(np.sort(w) - np.linalg.eigvalsh(h)))))
        m = int(rng.integers(1, 41))
        b = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
        oracle = float(np.sqrt(max(np.linalg.eigvalsh(b.conj().T @ b)[-1], 0.0)))
        norm_err = max(norm_err, abs(operator_norm(b) - oracle))
    ok = recon <= 1e-9 and norm_err <= 1e-10
    record(9, ok, f"reconstruction {recon:.2e}, eigenvalues vs oracle {eig_gap:.2e}, norm vs oracle {norm_err:.2e}", t0)
    assert ok


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                fn()
            except AssertionError:
                pass
