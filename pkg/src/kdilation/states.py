"""The completely positive maps ``sigma_V(n)``, fixed points, and state kernels.

A state is carried by its kernel ``k(lam, mu) = <V_lam^* Omega, V_mu^* Omega>``
on paths plus a formal empty path (written ``None`` here), with
``k(None, None) = 1`` and ``V_None^* Omega = Omega``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kgraph as kg
from .config import DEFAULT, Tolerances
from .dilation import build_dilation, commutant
from .errors import (
    GraphMismatch,
    InvarianceViolated,
    NotCofinal,
    NotCuntzPimsner,
    NotCyclic,
    NotInvariant,
    NotNormalized,
    NotPSD,
    ShapeMismatch,
)
from .family import OperatorFamily, validate_family
from .kgraph import KGraph, Path
from .linalg import gram_orthonormalize, is_psd, orthonormal_range, solve_linear_subspace, unvec

Symbol = Path | None


# ---------------------------------------------------------------------------
# sigma_V and fixed points
# ---------------------------------------------------------------------------


def sigma_apply(fam: OperatorFamily, n, x: np.ndarray) -> np.ndarray:
    """``sum_{deg lam = n} V_lam X V_lam^*``."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (fam.dim, fam.dim):
        raise ShapeMismatch(f"X must be {fam.dim}x{fam.dim}, got {x.shape}")
    out = np.zeros_like(x)
    for lam in fam.graph.paths(kg.as_degree(n, fam.graph.rank)):
        v = fam.op(lam)
        out += v @ x @ v.conj().T
    return out


def superoperator(fam: OperatorFamily, n, other: OperatorFamily | None = None) -> np.ndarray:
    """Matrix of ``X -> sum V_lam X G_lam^*`` on column-major ``vec X`` (``G`` defaults to ``V``)."""
    other = fam if other is None else other
    rows, cols = fam.dim, other.dim
    out = np.zeros((rows * cols, rows * cols), dtype=complex)
    for lam in fam.graph.paths(kg.as_degree(n, fam.graph.rank)):
        out += np.kron(other.op(lam).conj(), fam.op(lam))
    return out


def _joint_fixed(fam: OperatorFamily, other: OperatorFamily, degrees) -> np.ndarray:
    size = fam.dim * other.dim
    if size == 0:
        return np.zeros((0, 0), dtype=complex)
    eye = np.eye(size)
    system = np.vstack([superoperator(fam, n, other) - eye for n in degrees])
    return solve_linear_subspace(system, fam.tol)


@dataclass
class FixReport:
    dim: int
    basis: list[np.ndarray]
    paranoid_dim: int | None = None


def fix_space(fam: OperatorFamily, paranoid: bool = False) -> FixReport:
    """Joint fixed points of ``sigma_V(e_j)``, ``j = 1..r``.

    In paranoid mode the system is recomputed with ``n = 0`` and
    ``n = (1, .., 1)`` added and the resulting dimension is reported too.

    Raises:
        NotCofinal: some vertex receives no edge.
    """
    g = fam.graph
    if not g.is_cofinal():
        missing = [v for v in g.vertices if not any(e.range == v for e in g.edges.values())]
        raise NotCofinal(f"vertices {missing} receive no edge", witness={"vertices": missing})
    degrees = [kg.unit(g.rank, j) for j in range(1, g.rank + 1)]
    basis = _joint_fixed(fam, fam, degrees)
    mats = [unvec(basis[:, k], fam.dim) for k in range(basis.shape[1])]
    report = FixReport(len(mats), mats)
    if paranoid:
        extra = _joint_fixed(fam, fam, degrees + [kg.zero(g.rank), kg.ones(g.rank)])
        report.paranoid_dim = extra.shape[1]
    return report


def intertwiners(fam: OperatorFamily, other: OperatorFamily) -> list[np.ndarray]:
    """Basis of ``{X : sum_{deg lam = n} V_lam X G_lam^* = X for all n}``.

    The equations for ``n = 0, e_1, .., e_r`` suffice.
    """
    if fam.graph != other.graph:
        raise GraphMismatch("families live on different graphs")
    g = fam.graph
    degrees = [kg.zero(g.rank)] + [kg.unit(g.rank, j) for j in range(1, g.rank + 1)]
    basis = _joint_fixed(fam, other, degrees)
    return [unvec(basis[:, k], fam.dim, other.dim) for k in range(basis.shape[1])]


# ---------------------------------------------------------------------------
# triples and kernels
# ---------------------------------------------------------------------------


def krylov_span(start: np.ndarray, ops: list[np.ndarray], tol: Tolerances = DEFAULT) -> np.ndarray:
    """Orthonormal basis of the smallest subspace containing ``start`` and invariant under ``ops``."""
    q = orthonormal_range(start, tol)
    while True:
        grown = orthonormal_range(np.hstack([q] + [op @ q for op in ops]), tol)
        if grown.shape[1] == q.shape[1]:
            return q
        q = grown


@dataclass
class StateTriple:
    family: OperatorFamily
    omega: np.ndarray
    cyclic: bool
    span_rank: int


def make_triple(fam: OperatorFamily, omega, tol: Tolerances | None = None) -> StateTriple:
    """Validate ``(V, Omega)`` and record whether ``Omega`` is cyclic for the ``V_lam^*``.

    Raises:
        ShapeMismatch: ``omega`` has the wrong length.
        NotNormalized: ``||omega|| != 1``.
        InvarianceViolated: ``V`` is not row-isometric.
    """
    tol = fam.tol if tol is None else tol
    omega = np.asarray(omega, dtype=complex).reshape(-1)
    if omega.size != fam.dim:
        raise ShapeMismatch(f"omega needs {fam.dim} entries, got {omega.size}")
    if abs(np.linalg.norm(omega) - 1.0) > 1e-12:
        raise NotNormalized(f"||omega|| = {np.linalg.norm(omega):.15g}")
    if not fam.is_isometry:
        raise InvarianceViolated("a state triple needs a row-isometric family", witness={"row_min_eigs": fam.row_min_eigs})
    g = fam.graph
    ops = [fam.op(g.edge(e)).conj().T for e in g.edges] + [fam.op(g.vertex(v)) for v in g.vertices]
    span = krylov_span(omega[:, None], ops, tol)
    return StateTriple(fam, omega, span.shape[1] == fam.dim, span.shape[1])


@dataclass
class StateKernel:
    """Kernel values over ``[None] + paths``; ``matrix[i, j] = k(symbols[i], symbols[j])``."""

    graph: KGraph
    cap: kg.Degree
    symbols: list[Symbol]
    matrix: np.ndarray
    _index: dict = field(default_factory=dict, repr=False)

    def index(self, sym: Symbol) -> int:
        if not self._index:
            self._index.update({s: i for i, s in enumerate(self.symbols)})
        return self._index[sym]

    def value(self, lam: Symbol, mu: Symbol) -> complex:
        return complex(self.matrix[self.index(lam), self.index(mu)])


def kernel_symbols(graph: KGraph, cap) -> list[Symbol]:
    return [None] + list(graph.paths_upto(kg.as_degree(cap, graph.rank)))


def _extend(graph: KGraph, mu: Symbol, lam: Path) -> Symbol | bool:
    """``mu lam`` with the empty path as a unit; ``False`` when not composable."""
    if mu is None:
        return lam
    out = graph.try_compose(mu, lam)
    return False if out is None else out


def invariance_residual(k: StateKernel) -> tuple[float, str | None]:
    """Worst ``|sum_{deg lam = n} k(mu lam, nu lam) - k(mu, nu)|`` over the interior."""
    g = k.graph
    worst, witness = 0.0, None
    degs = [(0,) * g.rank if s is None else s.degree for s in k.symbols]
    for n in kg.box(k.cap):
        fits = [i for i, d in enumerate(degs) if kg.leq(kg.add(d, n), k.cap)]
        paths = g.paths(n)
        for i in fits:
            for j in fits:
                mu, nu = k.symbols[i], k.symbols[j]
                total = 0.0
                for lam in paths:
                    a = _extend(g, mu, lam)
                    b = _extend(g, nu, lam)
                    if a is False or b is False:
                        continue
                    total += k.matrix[k.index(a), k.index(b)]
                res = abs(total - k.matrix[i, j])
                if res > worst:
                    worst, witness = float(res), f"n={n} ({mu},{nu})"
    return worst, witness


def kernel_from_triple(triple: StateTriple, cap) -> StateKernel:
    """``k(lam, mu) = <V_lam^* Omega, V_mu^* Omega>`` for degrees up to ``cap``.

    Raises:
        InvarianceViolated: the kernel fails shift-invariance.
    """
    fam = triple.family
    g = fam.graph
    cap = kg.as_degree(cap, g.rank)
    syms = kernel_symbols(g, cap)
    vecs = np.column_stack(
        [triple.omega] + [fam.op(lam).conj().T @ triple.omega for lam in syms[1:]]
    ) if fam.dim else np.zeros((0, len(syms)), dtype=complex)
    k = StateKernel(g, cap, syms, vecs.conj().T @ vecs)
    res, witness = invariance_residual(k)
    if res > fam.tol.relation:
        raise InvarianceViolated(f"kernel fails invariance at {witness} ({res:.3e})", witness={"at": witness, "residual": res})
    return k


@dataclass
class Reconstruction:
    triple: StateTriple
    rank: int
    roundtrip_error: float
    interior_cap: kg.Degree


def kolmogorov_reconstruct(k: StateKernel, tol: Tolerances = DEFAULT) -> Reconstruction:
    """Rebuild a triple from a kernel on the interior ``deg <= cap - (1,..,1)``.

    The Gram matrix of the symbols ``T(lam)`` is factored per source vertex;
    ``V_mu^*`` sends ``T(lam)`` to ``T(lam mu)`` and its matrix entries in the
    orthonormal interior basis are read off from kernel values.

    Raises:
        ShapeMismatch: the matrix does not match the symbol list.
        NotPSD: the kernel is not normalised or not positive.
        NotInvariant: the kernel fails shift-invariance.
    """
    g = k.graph
    r = g.rank
    if k.matrix.shape != (len(k.symbols), len(k.symbols)):
        raise ShapeMismatch(f"kernel matrix is {k.matrix.shape} for {len(k.symbols)} symbols")
    if abs(k.value(None, None) - 1.0) > tol.relation:
        raise NotPSD(f"k(empty, empty) = {k.value(None, None)} is not 1", witness={"k00": str(k.value(None, None))})
    ok, low = is_psd(k.matrix, tol)
    if not ok:
        raise NotPSD(f"kernel has eigenvalue {low:.3e}", witness={"min_eig": low})
    res, witness = invariance_residual(k)
    if res > tol.relation:
        raise NotInvariant(f"kernel fails invariance at {witness} ({res:.3e})", witness={"at": witness, "residual": res})
    if not kg.leq(kg.ones(r), k.cap):
        from .errors import CapTooSmall

        raise CapTooSmall("kernel cap must be at least (1, .., 1)")
    inner = kg.subtract(k.cap, kg.ones(r))
    synth: dict[str, np.ndarray] = {}
    members: dict[str, list[int]] = {}
    for v in g.vertices:
        idx = [k.index(p) for p in g.paths_upto(inner, source=v)]
        members[v] = idx
        coords, rank = gram_orthonormalize(k.matrix[np.ix_(idx, idx)], tol)
        weights = np.sum(np.abs(coords) ** 2, axis=1)
        synth[v] = coords.conj().T / weights if rank else np.zeros((len(idx), 0), dtype=complex)
    dims = {v: synth[v].shape[1] for v in g.vertices}
    blocks = {}
    for name, e in g.edges.items():
        edge = g.edge(name)
        src, rng = e.source, e.range
        # <q^src_i, V_e^* q^rng_j> = sum conj(X_src) X_rng k(kappa, lam e)
        cross = np.zeros((len(members[src]), len(members[rng])), dtype=complex)
        for b, lam_i in enumerate(members[rng]):
            lam = k.symbols[lam_i]
            target = k.index(g.compose(lam, edge))
            cross[:, b] = k.matrix[members[src], target]
        adjoint = synth[src].conj().T @ cross @ synth[rng]
        blocks[name] = adjoint.conj().T
    fam = validate_family(g, dims, blocks, tol, strict=False)
    omega = np.concatenate(
        [synth[v].conj().T @ k.matrix[members[v], 0] for v in g.vertices]
    ) if fam.dim else np.zeros(0, dtype=complex)
    triple = StateTriple(fam, omega, True, fam.dim)
    # round trip on the interior
    syms = kernel_symbols(g, inner)
    vecs = np.column_stack([omega] + [fam.op(lam).conj().T @ omega for lam in syms[1:]])
    rebuilt = vecs.conj().T @ vecs
    idx = [k.index(s) for s in syms]
    err = float(np.max(np.abs(rebuilt - k.matrix[np.ix_(idx, idx)])))
    return Reconstruction(triple, fam.dim, err, inner)


# ---------------------------------------------------------------------------
# GNS compression and purity
# ---------------------------------------------------------------------------


@dataclass
class Compression:
    triple: StateTriple
    projection: np.ndarray
    basis: dict[str, np.ndarray]
    span_rank: int
    dilation_span_rank: int
    dilation_rank: int | None


def _require_cuntz_pimsner(fam: OperatorFamily) -> None:
    if not fam.is_isometry:
        raise NotCuntzPimsner("family is not row-isometric", witness={"row_min_eigs": fam.row_min_eigs})
    g = fam.graph
    for name in g.edges:
        e = g.edge(name)
        w = fam.op(e)
        res = float(np.max(np.abs(w.conj().T @ w - fam.op(g.vertex(e.source))))) if w.size else 0.0
        if res > 1e-9:
            raise NotCuntzPimsner(f"W_{name} is not a partial isometry onto its source block ({res:.3e})", witness={"edge": name, "residual": res})


def gns_compress(fam: OperatorFamily, omega, dilation_cap=None) -> Compression:
    """Compress a Cuntz-Pimsner family to ``K = span{W_lam^* Omega}``.

    Each vertex block of ``K`` keeps the standard basis when it fills the
    whole block of ``H``, so a family that is already minimal is returned
    unchanged.
    """
    _require_cuntz_pimsner(fam)
    omega = np.asarray(omega, dtype=complex).reshape(-1)
    if omega.size != fam.dim:
        raise ShapeMismatch(f"omega needs {fam.dim} entries, got {omega.size}")
    if abs(np.linalg.norm(omega) - 1.0) > 1e-12:
        raise NotNormalized(f"||omega|| = {np.linalg.norm(omega):.15g}")
    g = fam.graph
    tol = fam.tol
    adj = [fam.op(g.edge(e)).conj().T for e in g.edges] + [fam.op(g.vertex(v)) for v in g.vertices]
    span = krylov_span(omega[:, None], adj, tol)
    basis = {}
    for v in g.vertices:
        sl = fam.block_slice(v)
        piece = orthonormal_range(fam.vertex_projection(v) @ span, tol)
        if piece.shape[1] == fam.dims[v]:
            piece = fam.vertex_projection(v)[:, sl]
        basis[v] = piece
    dims = {v: basis[v].shape[1] for v in g.vertices}
    blocks = {
        name: basis[e.range].conj().T @ fam.op(g.edge(name)) @ basis[e.source] for name, e in g.edges.items()
    }
    out = validate_family(g, dims, blocks, tol)
    q = np.hstack([basis[v] for v in g.vertices])
    compressed_omega = q.conj().T @ omega
    triple = make_triple(out, compressed_omega / np.linalg.norm(compressed_omega))
    fwd = [fam.op(g.edge(e)) for e in g.edges] + [fam.op(g.vertex(v)) for v in g.vertices]
    full = krylov_span(q, fwd, tol).shape[1] if q.size else 0
    dil_rank = None
    if full == fam.dim and out.dim:
        cap = kg.ones(g.rank) if dilation_cap is None else kg.as_degree(dilation_cap, g.rank)
        dil_rank = build_dilation(out, cap, check_popescu=False).rank
    return Compression(triple, q @ q.conj().T, basis, q.shape[1], full, dil_rank)


@dataclass
class PurityReport:
    pure: bool
    fix_dim: int
    commutant_dim: int

    @property
    def verdict(self) -> str:
        return "PURE" if self.pure else "NOT PURE"


def purity_check(triple: StateTriple) -> PurityReport:
    """A cyclic triple gives a pure state exactly when ``Fix sigma_V`` is one-dimensional.

    Raises:
        NotCyclic: ``Omega`` is not cyclic for the ``V_lam^*``.
    """
    if not triple.cyclic:
        raise NotCyclic(
            f"span of V^* Omega has dimension {triple.span_rank} < {triple.family.dim}",
            witness={"span_rank": triple.span_rank, "dim": triple.family.dim},
        )
    fix = fix_space(triple.family)
    comm = commutant(triple.family)
    return PurityReport(fix.dim == 1, fix.dim, len(comm))
