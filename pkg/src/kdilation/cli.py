"""Command-line front end.

Every subcommand builds a JSON-ready report.  With ``--json`` the report is
printed as sorted, indented JSON with 12 significant digits; otherwise a
short human-readable summary is printed.  Exit codes: 0 when the check
passes, 1 when a mathematical check fails, 2 for malformed input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path as FsPath

import numpy as np

from . import characters as ch
from . import dilation as dl
from . import family as fm
from . import fock
from . import io
from . import kgraph as kg
from . import poisson as ps
from . import states as st
from .config import DEFAULT, Tolerances
from .errors import CheckFailure, InputError
from .generators import random_word, rng_for
from .linalg import matrix_to_dict, operator_norm, rank

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class Result:
    """A report plus its pass/fail status and a one-line headline."""

    def __init__(self, report: dict, ok: bool = True, headline: str = ""):
        self.report = report
        self.ok = ok
        self.headline = headline


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def parse_cap(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cap must be comma-separated integers, got {text!r}") from exc
    if any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("cap entries must be non-negative")
    return values


def parse_grid(text: str) -> tuple[float, ...]:
    parts = text.split(":")
    try:
        if len(parts) == 3:
            lo, hi, k = float(parts[0]), float(parts[1]), int(parts[2])
            if k < 1:
                raise ValueError
            grid = tuple(np.linspace(lo, hi, k)) if k > 1 else (lo,)
        else:
            grid = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"s-grid must be lo:hi:count or a comma list, got {text!r}") from exc
    if not grid or any(not 0.0 < s < 1.0 for s in grid):
        raise argparse.ArgumentTypeError("s-grid values must lie in (0, 1)")
    return tuple(float(s) for s in grid)


def parse_tol(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"--tol expects name=value, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"tolerance {name!r} needs a number") from exc


def unit_interval(text: str) -> float:
    try:
        s = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not 0.0 < s < 1.0:
        raise argparse.ArgumentTypeError("s must lie in (0, 1)")
    return s


def cap_for(graph: kg.KGraph, cap: list[int] | None, default: int) -> kg.Degree:
    if cap is None:
        return (default,) * graph.rank
    if len(cap) == 1:
        return (cap[0],) * graph.rank
    return kg.as_degree(cap, graph.rank)


def family_with_tol(path, tol: Tolerances) -> fm.OperatorFamily:
    fam = io.load_family(path)
    if tol == fam.tol:
        return fam
    return fm.validate_family(fam.graph, fam.dims, fam.blocks, tol)


def triple_with_tol(path, tol: Tolerances) -> st.StateTriple:
    triple = io.load_triple(path)
    if tol == triple.family.tol:
        return triple
    fam = fm.validate_family(triple.family.graph, triple.family.dims, triple.family.blocks, tol)
    return st.make_triple(fam, triple.omega, tol)


def optional_graph(path) -> kg.KGraph | None:
    return io.load_graph(path) if path else None


def _count(n: int, word: str) -> str:
    plural = "vertices" if word == "vertex" else word + "s"
    return f"{n} {word if n == 1 else plural}"


def _pstr(lam: kg.Path) -> str:
    return io.path_to_str(lam)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_validate_graph(args, tol: Tolerances) -> Result:
    g = io.load_graph(args.graph)
    colors = {str(j): g.edges_of_color(j) for j in range(1, g.rank + 1)}
    report = {
        "valid": True,
        "rank": g.rank,
        "vertices": list(g.vertices),
        "edges_by_color": colors,
        "counts": {"vertices": len(g.vertices), "edges": len(g.edges), "squares": len(g.squares)},
        "cofinal": g.is_cofinal(),
        "no_sources": g.has_no_sources(),
    }
    head = f"valid rank-{g.rank} graph: " + ", ".join(_count(n, w) for n, w in ((len(g.vertices), "vertex"), (len(g.edges), "edge"), (len(g.squares), "square")))
    return Result(report, True, head)


def cmd_paths(args, tol: Tolerances) -> Result:
    g = io.load_graph(args.graph)
    n = kg.as_degree(args.degree if len(args.degree) > 1 else args.degree[0], g.rank)
    for v in (args.range, args.source):
        if v is not None and v not in g.vertices:
            raise InputError(f"unknown vertex {v!r}")
    found = [_pstr(p) for p in g.paths(n, range=args.range, source=args.source)]
    return Result({"degree": list(n), "count": len(found), "paths": found}, True, f"{len(found)} paths of degree {list(n)}")


def cmd_mce(args, tol: Tolerances) -> Result:
    g = io.load_graph(args.graph)
    lam, mu = g.parse_path(args.lam), g.parse_path(args.mu)
    ext = [{"extension": _pstr(nu), "alpha": _pstr(a), "beta": _pstr(b)} for nu, a, b in g.mce(lam, mu)]
    report = {"lam": _pstr(lam), "mu": _pstr(mu), "degree": list(kg.join(lam.degree, mu.degree)), "extensions": ext}
    return Result(report, True, _count(len(ext), "minimal common extension"))


def cmd_fock_check(args, tol: Tolerances) -> Result:
    g = io.load_graph(args.graph)
    cap = cap_for(g, args.cap, 3)
    b = fock.FockBasis.build(g, cap)
    rep = fock.tck_check(b)
    vacuum = {str(j): fock.vacuum_identity_residual(b, j) for j in range(1, g.rank + 1)}
    rng = rng_for(args.seed, 1)
    z = np.exp(2j * np.pi * rng.uniform(0, 1, g.rank))
    gauge = max((fock.gauge_covariance_residual(b, g.edge(e), z, tol) for e in g.edges), default=0.0)
    worst = max([rep.max_residual(), gauge, *vacuum.values()])
    report = {
        "cap": list(cap),
        "basis_size": len(b),
        "residuals": rep.residuals,
        "witnesses": rep.witnesses,
        "checked": rep.checked,
        "notes": rep.notes,
        "vacuum_identity": vacuum,
        "gauge_covariance": gauge,
        "gauge_point": [complex(x) for x in z],
        "max_residual": worst,
    }
    ok = worst <= tol.relation
    return Result(report, ok, f"relations on the interior: max residual {worst:.3g}")


def cmd_validate_family(args, tol: Tolerances) -> Result:
    fam = family_with_tol(args.family, tol)
    report = {
        "valid": True,
        "dims": fam.dims,
        "dim": fam.dim,
        "is_isometry": fam.is_isometry,
        "square_residual": fam.square_residual,
        "row_min_eigs": list(fam.row_min_eigs),
    }
    if fam.graph.rank > 1:
        report["doubly_commuting_residual"] = fm.doubly_commuting_residual(fam)
    kind = "row-isometric" if fam.is_isometry else "row-contractive"
    return Result(report, True, f"valid {kind} family on a space of dimension {fam.dim}")


def cmd_popescu(args, tol: Tolerances) -> Result:
    fam = family_with_tol(args.family, tol)
    rep = fm.popescu_check(fam, args.s_grid or fm.DEFAULT_GRID)
    report = {
        "grid": list(rep.grid),
        "min_eigs": list(rep.min_eigs),
        "passes": list(rep.passes),
        "popescu_pass": rep.popescu_pass,
        "rho_hat": rep.rho_hat,
        "witness": rep.witness,
    }
    head = f"defect positive for s >= {rep.rho_hat}" if rep.popescu_pass else f"defect not positive: {rep.witness}"
    return Result(report, rep.popescu_pass, head)


def cmd_absorption(args, tol: Tolerances) -> Result:
    fam = family_with_tol(args.family, tol)
    cap = cap_for(fam.graph, args.cap, 6)
    rep = fm.absorption_check(fam, args.s, cap, raise_on_failure=False)
    report = {
        "s": rep.s,
        "cap": list(rep.cap),
        "error": rep.error,
        "tail_bound": rep.tail_bound,
        "isometry_error": rep.isometry_error,
        "within_bound": rep.ok,
    }
    return Result(report, rep.ok, f"partial sum error {rep.error:.3g} against bound {rep.tail_bound:.3g}")


def cmd_poisson(args, tol: Tolerances) -> Result:
    fam = family_with_tol(args.family, tol)
    p = io.load_poly(args.poly, fam.graph)
    if args.s is None:
        m = ps.poisson_apply(fam, p)
    else:
        m = ps.poisson_s_apply(fam, p, args.s)
    norm = operator_norm(m, tol) if m.size else 0.0
    report = {"s": args.s, "matrix": matrix_to_dict(m), "norm": norm}
    return Result(report, True, f"transform computed, norm {norm:.6g}")


def cmd_vn_check(args, tol: Tolerances) -> Result:
    fam = family_with_tol(args.family, tol)
    p = io.load_poly(args.poly, fam.graph)
    cap = cap_for(fam.graph, args.cap, 4)
    rep = ps.vn_report(fam, p, cap)
    report = {
        "cap": list(cap),
        "norm_pV": rep.norm_pV,
        "lower_bounds": rep.lower_bounds,
        "exact_norm": rep.exact_norm,
        "stagnated": rep.stagnated,
        "verdict": rep.verdict,
    }
    return Result(report, rep.verdict != "VIOLATION", f"{rep.verdict}: ||p(V)|| = {rep.norm_pV:.6g}")


def cmd_dilate(args, tol: Tolerances) -> Result:
    fam = family_with_tol(args.family, tol)
    cap = cap_for(fam.graph, args.cap, 2)
    space = dl.build_dilation(fam, cap)
    levels = []
    for m in kg.box(cap):
        cols = [i for i, (lam, _) in enumerate(space.symbols) if kg.leq(lam.degree, m)]
        levels.append({"degree": list(m), "rank": rank(space.coords[:, cols], tol) if cols else 0})
    residuals = {"compression": dl.compression_residual(space)}
    witnesses = {}
    if not args.skip_relations:
        rel = dl.verify_tck(space)
        residuals.update({f"tck_{k}": v for k, v in rel.residuals.items()})
        witnesses.update({f"tck_{k}": v for k, v in rel.witnesses.items()})
    if fam.is_isometry:
        full = dl.verify_cuntz_pimsner(space)
        residuals.update({f"cuntz_pimsner_{k}": v for k, v in full.residuals.items()})
        witnesses.update({f"cuntz_pimsner_{k}": v for k, v in full.witnesses.items()})
    report = {
        "cap": list(cap),
        "gram_rank": space.rank,
        "dim_H": space.dim_h,
        "dropped": space.dropped,
        "levels": levels,
        "residuals": residuals,
        "witnesses": witnesses,
    }
    worst = max(residuals.values())
    ok = worst <= tol.dilation
    return Result(report, ok, f"dilation of rank {space.rank} over dim H = {space.dim_h}; max residual {worst:.3g}")


def cmd_fix(args, tol: Tolerances) -> Result:
    fam = family_with_tol(args.family, tol)
    rep = st.fix_space(fam, paranoid=args.paranoid)
    report = {"dim": rep.dim, "paranoid_dim": rep.paranoid_dim}
    ok = rep.paranoid_dim is None or rep.paranoid_dim == rep.dim
    report["agree"] = ok
    return Result(report, ok, f"dim Fix = {rep.dim}")


def cmd_commutant(args, tol: Tolerances) -> Result:
    fam = family_with_tol(args.family, tol)
    basis = dl.commutant(fam)
    return Result({"dim": len(basis), "irreducible": len(basis) == 1}, True, f"commutant dimension {len(basis)}")


def cmd_kernel(args, tol: Tolerances) -> Result:
    triple = triple_with_tol(args.triple, tol)
    cap = cap_for(triple.family.graph, args.cap, 2)
    k = st.kernel_from_triple(triple, cap)
    res, witness = st.invariance_residual(k)
    data = io.kernel_to_json(k, k.graph.to_dict())
    report = {"cap": list(cap), "size": len(k.symbols), "invariance_residual": res, "witness": witness}
    if args.out:
        FsPath(args.out).write_text(io.dumps(data) + "\n", encoding="utf-8")
        report["written"] = str(args.out)
    else:
        report["kernel"] = data
    return Result(report, res <= tol.relation, f"kernel on {len(k.symbols)} symbols, invariance residual {res:.3g}")


def cmd_kolmogorov(args, tol: Tolerances) -> Result:
    k = io.load_kernel(args.kernel, optional_graph(args.graph))
    rec = st.kolmogorov_reconstruct(k, tol)
    fam = rec.triple.family
    report = {
        "rank": rec.rank,
        "dims": fam.dims,
        "interior_cap": list(rec.interior_cap),
        "roundtrip_error": rec.roundtrip_error,
        "cyclic": rec.triple.cyclic,
        "is_isometry": fam.is_isometry,
    }
    ok = rec.roundtrip_error <= 1e-8
    return Result(report, ok, f"reconstructed a family of dimension {rec.rank}, round-trip error {rec.roundtrip_error:.3g}")


def cmd_purity(args, tol: Tolerances) -> Result:
    triple = triple_with_tol(args.triple, tol)
    rep = st.purity_check(triple)
    report = {"verdict": rep.verdict, "pure": rep.pure, "fix_dim": rep.fix_dim, "commutant_dim": rep.commutant_dim, "irreducible": rep.commutant_dim == 1}
    return Result(report, True, f"{rep.verdict}, dim Fix = {rep.fix_dim}")


def cmd_intertwine(args, tol: Tolerances) -> Result:
    first = family_with_tol(args.family, tol)
    second = family_with_tol(args.other, tol)
    basis = st.intertwiners(first, second)
    return Result({"dim": len(basis)}, True, f"intertwiner space of dimension {len(basis)}")


def cmd_characters(args, tol: Tolerances) -> Result:
    graph, vertex, alphas = io.load_character(args.point, optional_graph(args.graph))
    point = ch.validate_character(graph, vertex, alphas)
    cap = cap_for(graph, args.cap, 20)
    wo = ch.wo_continuity_check(point, cap)
    report = {
        "vertex": vertex,
        "valid": True,
        "kappa": list(point.kappa),
        "empty_colors": list(point.empty_colors),
        "continuous": wo.continuous,
        "cap": list(cap),
        "norm_sq": wo.norm_sq,
        "norm_sq_target": wo.norm_sq_target,
        "tail_bound": wo.tail_bound,
        "vector_state_error": wo.vector_state_error,
        "vector_state_bound": wo.vector_state_bound,
        "explicit": wo.explicit,
    }
    if args.poly:
        report["value"] = ch.char_eval(point, io.load_poly(args.poly, graph))
    kind = "weak-operator continuous" if wo.continuous else "not weak-operator continuous"
    return Result(report, wo.ok, f"valid character at {vertex}, {kind}")


def leibniz_residual(d: ch.DerivationData, x, y) -> float:
    """``|delta(xy) - f_a(x) delta(y) - delta(x) f_b(y)|`` for products of generators ``x`` and ``y``."""
    g = d.graph

    def delta(word):
        lam = ch.word_path(g, word)
        return 0.0 if lam is None else ch.derivation_linear(d, lam)

    lhs = delta(list(x) + list(y))
    rhs = ch.module_character(d.a, x) * delta(y) + delta(x) * ch.module_character(d.b, y)
    return float(abs(lhs - rhs))


def cmd_derivations(args, tol: Tolerances) -> Result:
    graph, a, b, alpha_b, alphas = io.load_derivation(args.derivation, optional_graph(args.graph))
    d = ch.validate_derivation(graph, a, b, alpha_b, alphas)
    rng = rng_for(args.seed, 8)
    worst = 0.0
    for _ in range(args.words):
        x = random_word(graph, rng) or [graph.vertex(graph.vertices[0])]
        y = random_word(graph, rng) or [graph.vertex(graph.vertices[0])]
        worst = max(worst, leibniz_residual(d, x, y))
    report = {
        "a": a,
        "b": b,
        "h1_dimension": ch.h1_dimension(graph, a, b),
        "inner": ch.is_inner(d),
        "bound_constant": d.bound_constant,
        "pairs": args.words,
        "leibniz_max_residual": worst,
    }
    ok = worst <= tol.character
    return Result(report, ok, f"Leibniz residual {worst:.3g} over {args.words} word pairs")


# ---------------------------------------------------------------------------
# parser and dispatch
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print the report as JSON")
    common.add_argument("--seed", type=int, default=0, help="seed for any randomness (default 0)")
    common.add_argument("--tol", type=parse_tol, action="append", default=[], metavar="NAME=VALUE", help="override a tolerance")
    capped = argparse.ArgumentParser(add_help=False)
    capped.add_argument("--cap", type=parse_cap, default=None, metavar="A,B,...", help="truncation degree")

    parser = argparse.ArgumentParser(prog="kdilation", description="Checks for operator families on finite higher-rank graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text, parents=(common,)):
        p = sub.add_parser(name, parents=list(parents), help=help_text)
        p.set_defaults(handler=handler)
        return p

    p = add("validate-graph", cmd_validate_graph, "validate a graph file")
    p.add_argument("graph")
    p = add("paths", cmd_paths, "list paths of a given degree")
    p.add_argument("graph")
    p.add_argument("--degree", type=parse_cap, required=True)
    p.add_argument("--range")
    p.add_argument("--source")
    p = add("mce", cmd_mce, "minimal common extensions of two paths")
    p.add_argument("graph")
    p.add_argument("lam")
    p.add_argument("mu")
    p = add("fock-check", cmd_fock_check, "relations for truncated Fock creation operators", (common, capped))
    p.add_argument("graph")
    p = add("validate-family", cmd_validate_family, "validate an operator family")
    p.add_argument("family")
    p = add("popescu", cmd_popescu, "defect positivity over an s-grid")
    p.add_argument("family")
    p.add_argument("--s-grid", type=parse_grid, default=None, metavar="LO:HI:COUNT")
    p = add("absorption", cmd_absorption, "partial sums of the absorption identity", (common, capped))
    p.add_argument("family")
    p.add_argument("--s", type=unit_interval, default=0.9)
    p = add("poisson", cmd_poisson, "apply the Poisson transform to a polynomial")
    p.add_argument("family")
    p.add_argument("--poly", required=True)
    p.add_argument("--s", type=unit_interval, default=None, help="use the s-weighted transform")
    p = add("vn-check", cmd_vn_check, "von Neumann inequality against restricted Fock norms", (common, capped))
    p.add_argument("--family", required=True)
    p.add_argument("--poly", required=True)
    p = add("dilate", cmd_dilate, "build the truncated minimal dilation", (common, capped))
    p.add_argument("family")
    p.add_argument("--skip-relations", action="store_true", help="only report the compression residual")
    p = add("fix", cmd_fix, "fixed-point space of the completely positive maps")
    p.add_argument("family")
    p.add_argument("--paranoid", action="store_true", help="also impose degrees 0 and (1,..,1)")
    p = add("commutant", cmd_commutant, "commutant of a family")
    p.add_argument("family")
    p = add("kernel", cmd_kernel, "kernel of the vector state of a triple", (common, capped))
    p.add_argument("--triple", required=True)
    p.add_argument("--out", help="write the kernel file here instead of embedding it")
    p = add("kolmogorov", cmd_kolmogorov, "reconstruct a family from a kernel file")
    p.add_argument("kernel")
    p.add_argument("--graph", help="graph file, when the kernel file has none")
    p = add("purity", cmd_purity, "purity of the state of a cyclic triple")
    p.add_argument("--triple", required=True)
    p = add("intertwine", cmd_intertwine, "intertwiners between two families")
    p.add_argument("family")
    p.add_argument("other")
    p = add("characters", cmd_characters, "validate a character and test continuity", (common, capped))
    p.add_argument("point")
    p.add_argument("--graph", help="graph file, when the character file has none")
    p.add_argument("--poly", help="also evaluate the character on an analytic polynomial")
    p = add("derivations", cmd_derivations, "validate a derivation and test the Leibniz rule")
    p.add_argument("derivation")
    p.add_argument("--graph", help="graph file, when the derivation file has none")
    p.add_argument("--words", type=int, default=100, help="number of random word pairs")
    return parser


def _render_text(command: str, result: Result, out) -> None:
    status = "PASS" if result.ok else "FAIL"
    print(f"{command}: {status}", file=out)
    if result.headline:
        print(result.headline, file=out)
    for key in sorted(result.report):
        value = result.report[key]
        if isinstance(value, (dict, list)) and len(io.dumps(value)) > 200:
            continue
        print(f"  {key}: {io.jsonable(value)}", file=out)


def _emit_error(args, kind: str, message: str, witness, code: int, tol: Tolerances) -> int:
    if getattr(args, "json", False):
        report = {"command": args.command, "status": "error" if code == EXIT_INPUT else "fail", "error": {"kind": kind, "message": message}, "tolerances": tol.as_dict()}
        if witness is not None:
            report["witness"] = witness
        print(io.dumps(report))
    else:
        print(f"{args.command}: {'ERROR' if code == EXIT_INPUT else 'FAIL'}: {kind}: {message}", file=sys.stderr)
        if witness is not None:
            print(f"  witness: {io.jsonable(witness)}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INPUT
    try:
        tol = DEFAULT.replace(**dict(args.tol))
    except KeyError as exc:
        print(f"kdilation: error: {exc.args[0]}", file=sys.stderr)
        return EXIT_INPUT
    try:
        result = args.handler(args, tol)
    except CheckFailure as exc:
        return _emit_error(args, type(exc).__name__, str(exc), exc.witness, EXIT_FAIL, tol)
    except (InputError, ValueError, KeyError) as exc:
        return _emit_error(args, type(exc).__name__, str(exc), None, EXIT_INPUT, tol)
    except OSError as exc:
        return _emit_error(args, type(exc).__name__, str(exc), None, EXIT_INPUT, tol)
    report = dict(result.report)
    report["command"] = args.command
    report["status"] = "pass" if result.ok else "fail"
    report["tolerances"] = tol.as_dict()
    if args.json:
        print(io.dumps(report))
    else:
        _render_text(args.command, Result(report, result.ok, result.headline), sys.stdout)
    return EXIT_PASS if result.ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
