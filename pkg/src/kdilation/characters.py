"""Characters of the analytic algebra and derivations into one-dimensional bimodules.

A character is a base vertex ``a`` plus a scalar for each loop edge at ``a``;
every other edge acts as zero.  The derivation data for a pair ``(a, b)``
is a scalar for ``L_b`` (forced to zero when ``a == b``) plus a scalar for
each edge from ``b`` to ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kgraph as kg
from .errors import AlphaBNonzeroOnDiagonal, GraphSpecError, InputError, RowBoundViolated, SquareViolated
from .kgraph import KGraph, Path
from .polynomial import PolySpec

CHARACTER_TOL = 1e-12


@dataclass(frozen=True)
class CharacterPoint:
    graph: KGraph
    vertex: str
    alphas: dict[str, complex]
    kappa: tuple[float, ...]
    empty_colors: tuple[int, ...]

    def edge_value(self, name: str) -> complex:
        return self.alphas.get(name, 0.0)

    def path_value(self, lam: Path) -> complex:
        """``f(L_lam)``: 1 on the base vertex, the product of edge scalars on loops at it."""
        if lam.range != self.vertex or lam.source != self.vertex:
            return 0.0
        out = 1.0 + 0.0j
        for name in lam.edges:
            out *= self.edge_value(name)
        return out


def loop_edges(graph: KGraph, vertex: str) -> list[str]:
    return [n for n, e in graph.edges.items() if e.source == vertex and e.range == vertex]


def validate_character(graph: KGraph, vertex: str, alphas: Mapping[str, complex]) -> CharacterPoint:
    """Check the per-colour bound and square consistency of a candidate point.

    Colours with no loop edge at the vertex get ``kappa_j = 0`` and are listed
    in ``empty_colors``.

    Raises:
        GraphSpecError: unknown vertex, or a coefficient on a non-loop edge.
        RowBoundViolated: some ``kappa_j > 1``.
        SquareViolated: ``alpha_f alpha_g != alpha_g' alpha_f'`` for a square.
    """
    if vertex not in graph.vertices:
        raise GraphSpecError(f"unknown vertex {vertex!r}")
    loops = set(loop_edges(graph, vertex))
    bad = sorted(set(alphas) - loops)
    if bad:
        raise GraphSpecError(f"coefficients given for edges that are not loops at {vertex}: {bad}")
    vals = {n: complex(alphas.get(n, 0.0)) for n in sorted(loops)}
    kappa, empty = [], []
    for j in range(1, graph.rank + 1):
        names = [n for n in vals if graph.color(n) == j]
        if not names:
            empty.append(j)
        kappa.append(float(sum(abs(vals[n]) ** 2 for n in names)))
    for j, kj in enumerate(kappa, start=1):
        if kj > 1 + CHARACTER_TOL:
            raise RowBoundViolated(f"kappa_{j} = {kj:.15g} > 1", witness={"color": j, "kappa": kj})
    for (f, g), (gp, fp) in graph.squares.items():
        if graph.edges[f].range != vertex:
            continue
        lhs = vals.get(f, 0.0) * vals.get(g, 0.0)
        rhs = vals.get(gp, 0.0) * vals.get(fp, 0.0)
        if abs(lhs - rhs) > CHARACTER_TOL:
            raise SquareViolated(
                f"square {f}{g}={gp}{fp} fails on scalars ({abs(lhs - rhs):.3e})",
                witness={"square": f"{f}{g}={gp}{fp}", "residual": abs(lhs - rhs)},
            )
    return CharacterPoint(graph, vertex, vals, tuple(kappa), tuple(empty))


def char_eval(point: CharacterPoint, p: PolySpec) -> complex:
    """Evaluate the character on an analytic polynomial (every ``nu`` a vertex)."""
    if not p.is_analytic():
        raise InputError("characters are evaluated on analytic polynomials only (nu must be s(mu))")
    return complex(p.unit + sum(c * point.path_value(mu) for mu, _, c in p.terms))


def word_path(graph: KGraph, word: Sequence[Path]) -> Path | None:
    """The path of a product of generators, or ``None`` when the product is zero."""
    if not word:
        return None
    out = word[0]
    for nxt in word[1:]:
        out = graph.try_compose(out, nxt)
        if out is None:
            return None
    return out


def word_poly(graph: KGraph, word: Sequence[Path]) -> PolySpec:
    """``L_{w1} ... L_{wk}`` as a polynomial; the empty word is the unit."""
    if not word:
        return PolySpec.identity(graph)
    lam = word_path(graph, word)
    return PolySpec.build(graph) if lam is None else PolySpec.monomial(graph, lam)


@dataclass
class WoReport:
    continuous: bool
    kappa: tuple[float, ...]
    empty_colors: tuple[int, ...]
    cap: kg.Degree | None = None
    norm_sq: float | None = None
    norm_sq_target: float | None = None
    tail_bound: float | None = None
    vector_state_error: float | None = None
    vector_state_bound: float | None = None
    explicit: bool = False

    @property
    def ok(self) -> bool:
        if not self.continuous:
            return True
        within = abs(self.norm_sq - self.norm_sq_target) <= self.tail_bound + 1e-12
        state = self.vector_state_error <= self.vector_state_bound + 1e-12
        return within and state


def loop_path_count(graph: KGraph, vertex: str, cap) -> float:
    """Number of paths from ``vertex`` to itself with degree ``<= cap``, via colour adjacency matrices."""
    verts = list(graph.vertices)
    pos = {v: i for i, v in enumerate(verts)}
    adj = []
    for j in range(1, graph.rank + 1):
        m = np.zeros((len(verts), len(verts)))
        for e in graph.edges.values():
            if e.color == j:
                m[pos[e.range], pos[e.source]] += 1
        adj.append(m)
    total = 0.0
    for n in kg.box(kg.as_degree(cap, graph.rank)):
        prod = np.eye(len(verts))
        for m, k in zip(adj, n):
            prod = prod @ np.linalg.matrix_power(m, k)
        total += prod[pos[vertex], pos[vertex]]
    return total


def wo_continuity_check(point: CharacterPoint, cap=20, explicit_limit: int = 20000) -> WoReport:
    """Decide weak-operator continuity (every ``kappa_j < 1``) and test the vector state.

    The vector is ``xi = sum_{lam loop at a, deg lam <= cap} conj(f(L_lam)) delta_lam``.
    Its squared norm is compared with ``prod_j (1 - kappa_j)^-1`` and
    ``<xi, L_mu xi> / ||xi||^2`` with ``f(L_mu)`` for every edge ``mu``.  The
    vector is materialised when it has at most ``explicit_limit`` entries;
    otherwise the per-degree sums ``prod_j kappa_j^n_j`` are used directly.
    """
    g = point.graph
    report = WoReport(all(k < 1 for k in point.kappa), point.kappa, point.empty_colors)
    if not report.continuous:
        return report
    cap = kg.as_degree(cap, g.rank)
    kappa = np.array(point.kappa)
    target = float(np.prod(1.0 / (1.0 - kappa)))
    geo = [(1 - kj ** (c + 1)) / (1 - kj) for kj, c in zip(kappa, cap)]
    # exact tail: target - prod_j geo_j, bounded by a union of per-colour tails
    tail = target * sum(kj ** (c + 1) for kj, c in zip(kappa, cap))
    loops = set(loop_edges(g, point.vertex))
    weights: dict[Path, complex] = {}
    explicit = loop_path_count(g, point.vertex, cap) <= explicit_limit
    if explicit:
        for lam in g.paths_upto(cap, range=point.vertex, source=point.vertex):
            if all(n in loops for n in lam.edges):
                val = point.path_value(lam)
                if val != 0:
                    weights[lam] = np.conj(val)
    if explicit:
        norm_sq = float(sum(abs(w) ** 2 for w in weights.values()))
    else:
        norm_sq = float(np.prod(geo))
    worst, bound = 0.0, 0.0
    for name in g.edges:
        mu = g.edge(name)
        f_mu = point.path_value(mu)
        if explicit:
            inner = 0.0 + 0.0j
            for lam, w in weights.items():
                ext = g.try_compose(mu, lam)
                if ext is not None and ext in weights:
                    inner += np.conj(weights[ext]) * w
            approx = inner / norm_sq
        else:
            j = g.color(name) - 1
            shrink = geo[j] - kappa[j] ** cap[j] if cap[j] > 0 else 0.0
            approx = f_mu * shrink / geo[j]
        worst = max(worst, abs(approx - f_mu))
        j = g.color(name) - 1
        bound = max(bound, abs(f_mu) * kappa[j] ** cap[j])
    report.cap = cap
    report.norm_sq = norm_sq
    report.norm_sq_target = target
    report.tail_bound = tail
    report.vector_state_error = float(worst)
    report.vector_state_bound = float(bound)
    report.explicit = explicit
    return report


# ---------------------------------------------------------------------------
# derivations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DerivationData:
    graph: KGraph
    a: str
    b: str
    alpha_b: complex
    alphas: dict[str, complex]
    l2_norm: float
    bound_constant: float


def edges_between(graph: KGraph, a: str, b: str) -> list[str]:
    """Edges ``lam`` with ``r(lam) = a`` and ``s(lam) = b``."""
    return sorted(n for n, e in graph.edges.items() if e.range == a and e.source == b)


def h1_dimension(graph: KGraph, a: str, b: str) -> int:
    for v in (a, b):
        if v not in graph.vertices:
            raise GraphSpecError(f"unknown vertex {v!r}")
    return len(edges_between(graph, a, b))


def validate_derivation(graph: KGraph, a: str, b: str, alpha_b: complex, alphas: Mapping[str, complex]) -> DerivationData:
    """Validate derivation data and record the bound ``|alpha_b| + ||(alpha_lam, alpha_a)||_2``.

    Raises:
        GraphSpecError: unknown vertex or a coefficient on an edge not from ``b`` to ``a``.
        AlphaBNonzeroOnDiagonal: ``a == b`` with ``alpha_b != 0``.
    """
    for v in (a, b):
        if v not in graph.vertices:
            raise GraphSpecError(f"unknown vertex {v!r}")
    allowed = set(edges_between(graph, a, b))
    bad = sorted(set(alphas) - allowed)
    if bad:
        raise GraphSpecError(f"coefficients for edges outside Lambda^1_{{{a},{b}}}: {bad}")
    alpha_b = complex(alpha_b)
    if a == b and alpha_b != 0:
        raise AlphaBNonzeroOnDiagonal(f"alpha_b = {alpha_b} must vanish when a == b", witness={"alpha_b": str(alpha_b)})
    vals = {n: complex(alphas.get(n, 0.0)) for n in sorted(allowed)}
    l2 = float(np.sqrt(sum(abs(v) ** 2 for v in vals.values())))
    alpha_a = -alpha_b
    constant = abs(alpha_b) + float(np.sqrt(l2**2 + abs(alpha_a) ** 2))
    return DerivationData(graph, a, b, alpha_b, vals, l2, constant)


def _vertex_character(v: str):
    def f(lam: Path) -> complex:
        return 1.0 if lam.is_vertex and lam.range == v else 0.0

    return f


def derivation_linear(d: DerivationData, lam: Path) -> complex:
    """``delta(L_lam)`` from the defining formulas."""
    if lam.is_vertex:
        if d.a == d.b:
            return 0.0
        if lam.range == d.b:
            return d.alpha_b
        if lam.range == d.a:
            return -d.alpha_b
        return 0.0
    if lam.length == 1:
        return d.alphas.get(lam.edges[0], 0.0)
    return 0.0


def derivation_eval(d: DerivationData, word: Sequence[Path]) -> complex:
    """``delta(L_{w1} ... L_{wk})`` via the Leibniz rule with ``f_a`` on the left and ``f_b`` on the right."""
    fa, fb = _vertex_character(d.a), _vertex_character(d.b)
    total = 0.0 + 0.0j
    for i, x in enumerate(word):
        left = np.prod([fa(y) for y in word[:i]]) if i else 1.0
        right = np.prod([fb(y) for y in word[i + 1 :]]) if i + 1 < len(word) else 1.0
        if left == 0 or right == 0:
            continue
        total += left * derivation_linear(d, x) * right
    return complex(total)


def module_character(v: str, word: Sequence[Path]) -> complex:
    """``f_v`` on a product of generators (the empty product is 1)."""
    f = _vertex_character(v)
    return complex(np.prod([f(x) for x in word])) if word else 1.0 + 0.0j


def is_inner(d: DerivationData) -> bool:
    """Inner derivations vanish on every edge generator."""
    return all(v == 0 for v in d.alphas.values())
