"""Shipped fixtures and seeded random families, polynomials and points.

All randomness flows through an explicit ``numpy.random.Generator``; use
:func:`rng_for` to derive independent streams from one integer seed.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path as FsPath

import numpy as np

from . import kgraph as kg
from .family import OperatorFamily, validate_family
from .fock import FockBasis, creation
from .kgraph import KGraph, Path
from .linalg import orthonormal_range
from .polynomial import PolySpec

GRAPH_FIXTURES = ("g1", "g2", "sq", "c3", "flip_a", "flip_b", "n3", "two")


def fixtures_dir() -> FsPath:
    return FsPath(str(resources.files("kdilation") / "fixtures"))


def fixture_graph(name: str) -> KGraph:
    from .io import load_graph

    return load_graph(fixtures_dir() / f"{name}.json")


def fixture_family(name: str) -> OperatorFamily:
    from .io import load_family

    return load_family(fixtures_dir() / "families" / f"{name}.json")


def fixture_file(*parts: str) -> FsPath:
    return fixtures_dir().joinpath(*parts)


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for ``(seed, *stream)`` via ``SeedSequence`` spawning keys."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(stream)))


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_complex(rng: np.random.Generator, *shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def cycle_graph(n: int) -> KGraph:
    """Rank-1 cycle ``v0 -> v1 -> ... -> v0`` with edge ``a_i : v_i -> v_{i+1}``."""
    verts = [f"v{i}" for i in range(n)]
    edges = [(f"a{i}", 1, f"v{i}", f"v{(i + 1) % n}") for i in range(n)]
    return kg.KGraph.build(1, verts, edges)


def direct_sum(first: OperatorFamily, second: OperatorFamily) -> OperatorFamily:
    if first.graph != second.graph:
        from .errors import GraphMismatch

        raise GraphMismatch("direct sums need a common graph")
    dims = {v: first.dims[v] + second.dims[v] for v in first.graph.vertices}
    blocks = {}
    for name in first.graph.edges:
        a, b = first.blocks[name], second.blocks[name]
        m = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=complex)
        m[: a.shape[0], : a.shape[1]] = a
        m[a.shape[0] :, a.shape[1] :] = b
        blocks[name] = m
    return validate_family(first.graph, dims, blocks, first.tol)


def fock_compression(graph: KGraph, vectors: np.ndarray, basis: FockBasis) -> OperatorFamily:
    """Compress the Fock family to the smallest subspace containing ``vectors`` invariant under every ``L^*``.

    Such compressions are multiplicative and inherit positivity of the
    defect operator from the Fock family.
    """
    g = graph
    ops = {p: creation(basis, p).toarray() for p in g.paths_upto(basis.cap)}
    images = np.hstack([ops[p].conj().T @ vectors for p in ops])
    blocks_basis = {}
    for v in g.vertices:
        proj = ops[g.vertex(v)]
        blocks_basis[v] = orthonormal_range(proj @ images)
    dims = {v: blocks_basis[v].shape[1] for v in g.vertices}
    blocks = {}
    for name, e in g.edges.items():
        op = creation(basis, g.edge(name)).toarray()
        blocks[name] = blocks_basis[e.range].conj().T @ op @ blocks_basis[e.source]
    return validate_family(g, dims, blocks)


def random_popescu_family(
    graph: KGraph, rng: np.random.Generator, max_length: int | None = None, vectors: int = 1, scale: bool = True
) -> OperatorFamily:
    """A seeded family satisfying the defect positivity condition.

    Built by compressing the Fock family to the co-invariant hull of random
    vectors supported on paths of length ``<= max_length``, then applying
    random per-colour weights in ``(0.3, 1]``, random phases and a random
    unitary change of basis in each vertex block.
    """
    r = graph.rank
    if max_length is None:
        max_length = int(rng.integers(1, 3)) if r == 1 else 1
    cap = (max_length,) * r
    basis = FockBasis.build(graph, cap)
    mask = np.array([p.length <= max_length for p in basis.paths])
    x = random_complex(rng, len(basis), vectors) * mask[:, None]
    fam = fock_compression(graph, x, basis)
    weights = rng.uniform(0.3, 1.0, r) if scale else np.ones(r)
    phases = np.exp(2j * np.pi * rng.uniform(0, 1, r))
    unis = {v: random_unitary(rng, fam.dims[v]) for v in graph.vertices}
    blocks = {}
    for name, e in graph.edges.items():
        c = graph.color(name) - 1
        blocks[name] = weights[c] * phases[c] * (unis[e.range].conj().T @ fam.blocks[name] @ unis[e.source])
    return validate_family(graph, fam.dims, blocks)


def random_cuntz_pimsner_cycle(rng: np.random.Generator, n: int | None = None, m: int | None = None) -> OperatorFamily:
    """Unitary blocks around a cycle; half the draws get a degenerate holonomy."""
    n = int(rng.integers(1, 4)) if n is None else n
    m = int(rng.integers(1, max(2, 6 // n) + 1)) if m is None else m
    g = cycle_graph(n)
    us = [random_unitary(rng, m) for _ in range(n)]
    if rng.uniform() < 0.5 and m > 1:
        phases = np.exp(2j * np.pi * rng.uniform(0, 1, m))
        phases[1] = phases[0]
        w = random_unitary(rng, m)
        hol = w @ np.diag(phases) @ w.conj().T
        rest = np.eye(m, dtype=complex)
        for u in us[1:]:
            rest = u @ rest
        us[0] = rest.conj().T @ hol
    blocks = {f"a{i}": us[i] for i in range(n)}
    return validate_family(g, {v: m for v in g.vertices}, blocks)


def random_contraction(rng: np.random.Generator, n: int, norm: float | None = None) -> np.ndarray:
    a = random_complex(rng, n, n)
    s = np.linalg.svd(a, compute_uv=False)[0]
    target = rng.uniform(0.2, 1.0) if norm is None else norm
    return a * (target / s)


def doubly_commuting_sq(rng: np.random.Generator, n: int = 2) -> OperatorFamily:
    """``V_e = A (x) I`` and ``V_f = I (x) B`` on the one-square graph."""
    g = fixture_graph("sq")
    a, b = random_contraction(rng, n), random_contraction(rng, n)
    eye = np.eye(n)
    return validate_family(g, {"v": n * n}, {"e": np.kron(a, eye), "f": np.kron(eye, b)})


def non_popescu_sq(rng: np.random.Generator, n: int = 2) -> OperatorFamily:
    """``V_e = V_f = A`` with ``||A|| = 1``; the defect fails near ``s = 1`` for generic ``A``."""
    g = fixture_graph("sq")
    a = random_contraction(rng, n, norm=1.0)
    return validate_family(g, {"v": n}, {"e": a, "f": a})


def random_polynomial(graph: KGraph, rng: np.random.Generator, max_length: int = 2, max_terms: int = 4) -> PolySpec:
    """Random ``c0 + sum c L_mu L_nu^*`` with ``|mu|, |nu| <= max_length`` and ``s(mu) = s(nu)``."""
    paths = [p for p in graph.paths_upto((max_length,) * graph.rank) if p.length <= max_length]
    terms = []
    for _ in range(int(rng.integers(1, max_terms + 1))):
        mu = paths[int(rng.integers(len(paths)))]
        same = [p for p in paths if p.source == mu.source]
        nu = same[int(rng.integers(len(same)))]
        terms.append((mu, nu, complex(*rng.standard_normal(2))))
    unit = complex(*rng.standard_normal(2)) if rng.uniform() < 0.3 else 0.0
    return PolySpec.build(graph, terms, unit)


def random_row_polynomial(graph: KGraph, rng: np.random.Generator, color: int) -> PolySpec:
    """``sum gamma_lam L_lam`` over the edges of one colour."""
    terms = [(graph.edge(n), graph.vertex(graph.edges[n].source), complex(*rng.standard_normal(2))) for n in graph.edges_of_color(color)]
    return PolySpec.build(graph, terms)


def random_flip_character(rng: np.random.Generator, graph: KGraph | None = None) -> dict[str, complex]:
    """A valid point on the first FLIP completion: ``(a_e1, a_e2)`` parallel to ``(a_f1, a_f2)``."""
    direction = random_complex(rng, 2)
    direction /= np.linalg.norm(direction)
    t = rng.uniform(0, 1) * np.exp(2j * np.pi * rng.uniform())
    u = rng.uniform(0, 1) * np.exp(2j * np.pi * rng.uniform())
    return {"e1": t * direction[0], "e2": t * direction[1], "f1": u * direction[0], "f2": u * direction[1]}


def random_word(graph: KGraph, rng: np.random.Generator, max_length: int = 3, generators: list[Path] | None = None) -> list[Path]:
    """A random product of vertex and edge generators (not necessarily composable)."""
    gens = generators if generators is not None else [graph.vertex(v) for v in graph.vertices] + [graph.edge(e) for e in graph.edges]
    return [gens[int(rng.integers(len(gens)))] for _ in range(int(rng.integers(0, max_length + 1)))]
