"""Concrete contraction families indexed by a graph.

A family is stored as per-vertex block dimensions plus one matrix per edge.
Operators are always handled globally as ``d x d`` matrices on
``H = (+)_a H_a`` with the vertex blocks laid out in declaration order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import kgraph as kg
from .config import DEFAULT, Tolerances
from .errors import RelationViolated, RowContractionViolated, ShapeMismatch, TailBoundExceeded
from .kgraph import KGraph, Path
from .linalg import as_matrix, hermitian_eig, is_psd, operator_norm

DEFAULT_GRID = tuple(round(0.5 + 0.05 * k, 2) for k in range(10)) + (0.99,)


@dataclass
class OperatorFamily:
    """A validated family ``V`` on ``H = (+)_a H_a``.

    Attributes:
        graph: the underlying graph.
        dims: block dimension for each vertex.
        blocks: edge name -> matrix of shape ``dims[r(e)] x dims[s(e)]``.
        is_isometry: every row defect ``I - sum_{deg e = e_j} V_e V_e^*`` vanishes.
        square_residual: worst ``||V_f V_g - V_g' V_f'||`` over all squares.
        row_min_eigs: smallest eigenvalue of each colour's row defect.
    """

    graph: KGraph
    dims: dict[str, int]
    blocks: dict[str, np.ndarray]
    tol: Tolerances = DEFAULT
    is_isometry: bool = False
    square_residual: float = 0.0
    row_min_eigs: tuple[float, ...] = ()
    offsets: dict[str, int] = field(default_factory=dict, repr=False)
    _ops: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return sum(self.dims.values())

    def block_slice(self, vertex: str) -> slice:
        start = self.offsets[vertex]
        return slice(start, start + self.dims[vertex])

    def vertex_projection(self, vertex: str) -> np.ndarray:
        p = np.zeros((self.dim, self.dim), dtype=complex)
        sl = self.block_slice(vertex)
        p[sl, sl] = np.eye(self.dims[vertex])
        return p

    def edge_matrix(self, name: str) -> np.ndarray:
        e = self.graph.edges[name]
        m = np.zeros((self.dim, self.dim), dtype=complex)
        m[self.block_slice(e.range), self.block_slice(e.source)] = self.blocks[name]
        return m

    def op(self, path: Path) -> np.ndarray:
        """Global matrix ``V_path`` (cached)."""
        hit = self._ops.get(path)
        if hit is None:
            if path.is_vertex:
                hit = self.vertex_projection(path.range)
            else:
                hit = self.edge_matrix(path.edges[0])
                for name in path.edges[1:]:
                    hit = hit @ self.edge_matrix(name)
            self._ops[path] = hit
        return hit

    def row_sum(self, n) -> np.ndarray:
        """``sum_{deg lam = n} V_lam V_lam^*``."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for lam in self.graph.paths(kg.as_degree(n, self.graph.rank)):
            v = self.op(lam)
            out += v @ v.conj().T
        return out

    def with_blocks(self, blocks: Mapping[str, np.ndarray], dims: Mapping[str, int] | None = None) -> "OperatorFamily":
        return validate_family(self.graph, dict(self.dims if dims is None else dims), blocks, self.tol)


def _offsets(graph: KGraph, dims: Mapping[str, int]) -> dict[str, int]:
    out, at = {}, 0
    for v in graph.vertices:
        out[v] = at
        at += dims[v]
    return out


def _check_shapes(graph: KGraph, dims: Mapping[str, int], edge_ops: Mapping) -> dict[str, np.ndarray]:
    if set(dims) != set(graph.vertices):
        missing = sorted(set(graph.vertices) - set(dims))
        extra = sorted(set(dims) - set(graph.vertices))
        raise ShapeMismatch(f"dims must name every vertex exactly (missing {missing}, unknown {extra})")
    for v, k in dims.items():
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ShapeMismatch(f"dimension of {v} must be a non-negative integer, got {k!r}")
    extra = sorted(set(edge_ops) - set(graph.edges))
    if extra:
        raise ShapeMismatch(f"matrices given for unknown edges {extra}")
    blocks = {}
    for name, e in graph.edges.items():
        shape = (dims[e.range], dims[e.source])
        if name not in edge_ops:
            if shape[0] * shape[1] == 0:
                blocks[name] = np.zeros(shape, dtype=complex)
                continue
            raise ShapeMismatch(f"no matrix given for edge {name}")
        m = as_matrix(edge_ops[name]) if np.size(edge_ops[name]) else np.zeros(shape, dtype=complex)
        if m.shape != shape:
            raise ShapeMismatch(f"edge {name} needs shape {shape}, got {m.shape}")
        blocks[name] = m
    return blocks


def validate_family(
    graph: KGraph,
    dims: Mapping[str, int],
    edge_ops: Mapping[str, np.ndarray],
    tol: Tolerances = DEFAULT,
    strict: bool = True,
) -> OperatorFamily:
    """Build a family and check square consistency and the row bounds.

    With ``strict=False`` the checks are still run and recorded but no
    exception is raised; this is used for intermediate reconstructions.

    Raises:
        ShapeMismatch: a block has the wrong shape or is missing.
        RelationViolated: a square ``fg = g'f'`` fails for the matrices.
        RowContractionViolated: some colour's row defect is not PSD.
    """
    dims = {v: int(k) for v, k in dims.items()}
    blocks = _check_shapes(graph, dims, edge_ops)
    fam = OperatorFamily(graph, dims, blocks, tol, offsets=_offsets(graph, dims))
    worst, witness = 0.0, None
    for (f, g), (gp, fp) in graph.squares.items():
        lhs = fam.edge_matrix(f) @ fam.edge_matrix(g)
        rhs = fam.edge_matrix(gp) @ fam.edge_matrix(fp)
        res = float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0
        if res > worst:
            worst, witness = res, f"{f}{g}={gp}{fp}"
    fam.square_residual = worst
    if strict and worst > tol.relation:
        raise RelationViolated(f"square {witness} fails by {worst:.3e}", witness={"square": witness, "residual": worst})
    mins = []
    iso = True
    for j in range(1, graph.rank + 1):
        defect = np.eye(fam.dim) - fam.row_sum(kg.unit(graph.rank, j))
        defect = 0.5 * (defect + defect.conj().T)
        ok, low = is_psd(defect, tol) if fam.dim else (True, 0.0)
        mins.append(low)
        if strict and not ok:
            raise RowContractionViolated(
                f"row defect of colour {j} has eigenvalue {low:.3e}", witness={"color": j, "min_eig": low}
            )
        if fam.dim and np.max(np.abs(defect)) > tol.relation:
            iso = False
    fam.row_min_eigs = tuple(mins)
    fam.is_isometry = iso
    return fam


def extend_to_path(fam: OperatorFamily, lam: Path) -> np.ndarray:
    """``V_lam`` as a global matrix: the ordered product along the canonical word."""
    return fam.op(lam).copy()


def defect(fam: OperatorFamily, s: float) -> np.ndarray:
    """``Delta_s = sum_{deg mu <= (1,..,1)} (-s^2)^|mu| V_mu V_mu^*``."""
    g = fam.graph
    out = np.zeros((fam.dim, fam.dim), dtype=complex)
    for mu in g.paths_upto(kg.ones(g.rank)):
        v = fam.op(mu)
        out += (-(s**2)) ** mu.length * (v @ v.conj().T)
    return 0.5 * (out + out.conj().T)


def product_defect(fam: OperatorFamily, s: float) -> np.ndarray:
    """``prod_j (I - s^2 sum_{deg lam = e_j} V_lam V_lam^*)`` in colour order."""
    out = np.eye(fam.dim, dtype=complex)
    for j in range(1, fam.graph.rank + 1):
        out = out @ (np.eye(fam.dim) - s**2 * fam.row_sum(kg.unit(fam.graph.rank, j)))
    return out


def doubly_commuting_residual(fam: OperatorFamily) -> float:
    """Worst ``||V_lam^* V_mu - sum_MCE V_alpha V_beta^*||`` over edges of different colours."""
    g = fam.graph
    worst = 0.0
    names = list(g.edges)
    for a in names:
        for b in names:
            if g.color(a) == g.color(b):
                continue
            lam, mu = g.edge(a), g.edge(b)
            lhs = fam.op(lam).conj().T @ fam.op(mu)
            rhs = np.zeros_like(lhs)
            for _, alpha, beta in g.mce(lam, mu):
                rhs += fam.op(alpha) @ fam.op(beta).conj().T
            if lhs.size:
                worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def is_doubly_commuting(fam: OperatorFamily) -> bool:
    return doubly_commuting_residual(fam) <= fam.tol.relation


@dataclass
class DefectReport:
    grid: tuple[float, ...]
    min_eigs: tuple[float, ...]
    passes: tuple[bool, ...]
    popescu_pass: bool
    rho_hat: float | None
    witness: dict | None = None


def popescu_check(fam: OperatorFamily, grid: Iterable[float] = DEFAULT_GRID) -> DefectReport:
    """Positivity of the defect operator over a grid of ``s`` values.

    The condition passes when positivity holds from some grid point through
    the last one; ``rho_hat`` is the smallest such grid point.
    """
    grid = tuple(float(s) for s in grid)
    if not grid or any(not 0.0 < s < 1.0 for s in grid):
        raise ValueError("s-grid must be a non-empty subset of (0, 1)")
    grid = tuple(sorted(grid))
    mins, passes = [], []
    for s in grid:
        ok, low = is_psd(defect(fam, s), fam.tol) if fam.dim else (True, 0.0)
        mins.append(low)
        passes.append(ok)
    rho = None
    for k in range(len(grid) - 1, -1, -1):
        if not passes[k]:
            break
        rho = grid[k]
    witness = None
    failing = [k for k, ok in enumerate(passes) if not ok]
    if failing:
        k = failing[-1]
        witness = {"s": grid[k], "min_eig": mins[k]}
    return DefectReport(grid, tuple(mins), tuple(passes), bool(passes[-1]), rho, witness)


def absorption_tail_bound(defect_norm: float, s: float, cap: kg.Degree) -> float:
    """Bound on ``||I - sum_{deg lam <= cap} s^(2|lam|) V_lam Delta V_lam^*||``.

    Each degree ``n`` contributes at most ``s^(2|n|) ||Delta||`` because
    ``sigma_V(n)`` is a unital-at-most contraction on positive operators.
    """
    q = s * s
    full = (1.0 - q) ** (-len(cap))
    inside = 1.0
    for c in cap:
        inside *= (1.0 - q ** (c + 1)) / (1.0 - q)
    return defect_norm * max(full - inside, 0.0)


@dataclass
class AbsorptionReport:
    s: float
    cap: kg.Degree
    error: float
    tail_bound: float
    isometry_error: float | None
    ok: bool


def psd_sqrt(a: np.ndarray, tol: Tolerances = DEFAULT) -> np.ndarray:
    w, u = hermitian_eig(a, tol)
    return (u * np.sqrt(np.clip(w, 0.0, None))) @ u.conj().T


def absorption_check(fam: OperatorFamily, s: float, cap, raise_on_failure: bool = True) -> AbsorptionReport:
    """Partial sums of ``sum_lam s^(2|lam|) V_lam Delta_s V_lam^* = I`` against the tail bound.

    When ``Delta_s`` is PSD the truncated isometry ``W_s`` (the column of
    blocks ``s^|lam| Delta_s^(1/2) V_lam^*``) is also materialised.
    """
    g = fam.graph
    cap = kg.as_degree(cap, g.rank)
    d = fam.dim
    delta = defect(fam, s)
    partial = np.zeros((d, d), dtype=complex)
    for lam in g.paths_upto(cap):
        v = fam.op(lam)
        partial += s ** (2 * lam.length) * (v @ delta @ v.conj().T)
    error = operator_norm(partial - np.eye(d), fam.tol) if d else 0.0
    bound = absorption_tail_bound(operator_norm(delta, fam.tol) if d else 0.0, s, cap)
    iso_err = None
    if d and is_psd(delta, fam.tol)[0]:
        root = psd_sqrt(delta, fam.tol)
        w_s = np.vstack([s**lam.length * (root @ fam.op(lam).conj().T) for lam in g.paths_upto(cap)])
        iso_err = operator_norm(w_s.conj().T @ w_s - np.eye(d), fam.tol)
    ok = error <= bound + 1e-9 and (iso_err is None or iso_err <= bound + 1e-9)
    report = AbsorptionReport(s, cap, error, bound, iso_err, ok)
    if raise_on_failure and not ok:
        raise TailBoundExceeded(
            f"absorption error {error:.3e} exceeds bound {bound:.3e}", witness={"error": error, "bound": bound}
        )
    return report
