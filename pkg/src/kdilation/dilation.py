"""Exact finite models of the minimal dilation of a contraction family.

The dilation space is spanned by symbols ``W_lam xi`` with ``deg(lam) <= N``
and ``xi`` a basis vector of ``H_{s(lam)}``.  Their inner products are
finite sums over minimal common extensions,

    <W_lam xi, W_mu eta> = sum_{lam alpha = mu beta} <V_alpha^* xi, V_beta^* eta>,

so the level-``N`` space is represented exactly by orthonormal coordinates
of that Gram matrix.  Operators on a level are expressed in those
coordinates: ``raise_op`` is ``W_gamma`` on the sublevel it maps into level
``N`` (zero on the orthogonal complement), and ``adjoint_op`` is
``W_gamma^*``, which preserves every level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kgraph as kg
from .config import Tolerances
from .errors import GramNotPSD, NotPSD
from .family import OperatorFamily, popescu_check
from .kgraph import Path
from .linalg import gram_orthonormalize, hermitian_eig, pinv_wide, solve_linear_subspace, unvec


@dataclass
class DilationSpace:
    family: OperatorFamily
    cap: kg.Degree
    paths: list[Path]
    symbols: list[tuple[Path, int]]
    gram: np.ndarray
    coords: np.ndarray
    rank: int
    dropped: int
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def tol(self) -> Tolerances:
        return self.family.tol

    @property
    def dim_h(self) -> int:
        return self.family.dim

    def symbol_index(self) -> dict[tuple[Path, int], int]:
        hit = self._cache.get("index")
        if hit is None:
            hit = {s: i for i, s in enumerate(self.symbols)}
            self._cache["index"] = hit
        return hit

    def columns(self, lam: Path) -> list[int]:
        """Symbol positions ``(lam, i)`` for ``i`` in the block of ``s(lam)``."""
        idx = self.symbol_index()
        sl = self.family.block_slice(lam.source)
        return [idx[lam, i] for i in range(sl.start, sl.stop)]

    def embedding(self) -> np.ndarray:
        """Coordinates of ``H`` inside level ``N`` (an isometry ``d -> rank``)."""
        hit = self._cache.get("embedding")
        if hit is None:
            idx = self.symbol_index()
            cols = []
            for v in self.family.graph.vertices:
                sl = self.family.block_slice(v)
                cols.extend(idx[self.family.graph.vertex(v), i] for i in range(sl.start, sl.stop))
            hit = self.coords[:, cols]
            self._cache["embedding"] = hit
        return hit

    def level_pinv(self, level: kg.Degree) -> tuple[list[int], np.ndarray]:
        """Symbols of degree ``<= level`` and the pseudo-inverse of their coordinates."""
        key = ("pinv", level)
        hit = self._cache.get(key)
        if hit is None:
            sel = [i for i, (lam, _) in enumerate(self.symbols) if kg.leq(lam.degree, level)]
            hit = (sel, pinv_wide(self.coords[:, sel], self.tol))
            self._cache[key] = hit
        return hit

    def projection(self, level) -> np.ndarray:
        """Orthogonal projection of level ``N`` onto the sublevel ``level``."""
        if level is None or any(c < 0 for c in level):
            return np.zeros((self.rank, self.rank), dtype=complex)
        level = kg.meet(tuple(level), self.cap)
        key = ("proj", level)
        hit = self._cache.get(key)
        if hit is None:
            sel, pinv = self.level_pinv(level)
            hit = self.coords[:, sel] @ pinv
            self._cache[key] = hit
        return hit

    def raise_op(self, gamma: Path) -> np.ndarray:
        """``W_gamma`` restricted to level ``N - deg(gamma)``, as an operator on level ``N``."""
        key = ("raise", gamma)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if not kg.leq(gamma.degree, self.cap):
            hit = np.zeros((self.rank, self.rank), dtype=complex)
        else:
            level = kg.subtract(self.cap, gamma.degree)
            sel, pinv = self.level_pinv(level)
            idx = self.symbol_index()
            g = self.family.graph
            image = np.zeros((self.rank, len(sel)), dtype=complex)
            for k, i in enumerate(sel):
                lam, b = self.symbols[i]
                if gamma.source == lam.range:
                    image[:, k] = self.coords[:, idx[g.compose(gamma, lam), b]]
            hit = image @ pinv
        self._cache[key] = hit
        return hit

    def adjoint_op(self, gamma: Path) -> np.ndarray:
        """``W_gamma^*`` on level ``N``, from the extension formula."""
        key = ("adjoint", gamma)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        fam = self.family
        g = fam.graph
        image = np.zeros((self.rank, len(self.symbols)), dtype=complex)
        for lam in self.paths:
            lam_cols = self.columns(lam)
            lam_block = fam.block_slice(lam.source)
            for _, alpha, beta in g.mce(gamma, lam):
                alpha_block = fam.block_slice(alpha.source)
                vb = fam.op(beta).conj().T[alpha_block, lam_block]
                image[:, lam_cols] += self.coords[:, self.columns(alpha)] @ vb
        _, pinv = self.level_pinv(self.cap)
        hit = image @ pinv
        self._cache[key] = hit
        return hit

    def at_level(self, cap) -> "DilationSpace":
        return build_dilation(self.family, cap, check_popescu=False)


def gram_matrix(fam: OperatorFamily, paths: list[Path]) -> tuple[np.ndarray, list[tuple[Path, int]]]:
    """Gram matrix of the symbols ``(lam, i)`` for the given paths."""
    g = fam.graph
    symbols = []
    starts = []
    for lam in paths:
        sl = fam.block_slice(lam.source)
        starts.append(len(symbols))
        symbols.extend((lam, i) for i in range(sl.start, sl.stop))
    n = len(symbols)
    gram = np.zeros((n, n), dtype=complex)
    for p, lam in enumerate(paths):
        rows = fam.block_slice(lam.source)
        r0 = starts[p]
        for q in range(p, len(paths)):
            mu = paths[q]
            if not fam.dims[lam.source] or not fam.dims[mu.source]:
                continue
            cols = fam.block_slice(mu.source)
            acc = np.zeros((rows.stop - rows.start, cols.stop - cols.start), dtype=complex)
            for _, alpha, beta in g.mce(lam, mu):
                acc += (fam.op(alpha) @ fam.op(beta).conj().T)[rows, cols]
            c0 = starts[q]
            gram[r0 : r0 + acc.shape[0], c0 : c0 + acc.shape[1]] = acc
            gram[c0 : c0 + acc.shape[1], r0 : r0 + acc.shape[0]] = acc.conj().T
    return gram, symbols


def build_dilation(fam: OperatorFamily, cap, check_popescu: bool = True) -> DilationSpace:
    """Assemble and factor the level-``cap`` Gram matrix of the minimal dilation.

    Raises:
        GramNotPSD: the Gram matrix has a clearly negative eigenvalue.
    """
    g = fam.graph
    cap = kg.as_degree(cap, g.rank)
    if check_popescu:
        report = popescu_check(fam)
        if not report.popescu_pass:
            raise GramNotPSD(
                "the family fails the defect positivity condition; no dilation exists",
                witness=report.witness,
            )
    paths = g.paths_upto(cap)
    gram, symbols = gram_matrix(fam, paths)
    try:
        coords, rank = gram_orthonormalize(gram, fam.tol)
    except NotPSD as exc:
        raise GramNotPSD(str(exc), witness=exc.witness) from exc
    return DilationSpace(fam, cap, paths, symbols, gram, coords, rank, len(symbols) - rank)


def dilation_operator(space: DilationSpace, gamma: Path) -> tuple[np.ndarray, DilationSpace]:
    """Rectangular ``W_gamma`` from level ``N`` coordinates to level ``N + deg(gamma)``.

    Returns the matrix and the target level it is expressed in.
    """
    g = space.family.graph
    target = space.at_level(kg.add(space.cap, gamma.degree))
    idx = target.symbol_index()
    image = np.zeros((target.rank, len(space.symbols)), dtype=complex)
    for k, (lam, b) in enumerate(space.symbols):
        if gamma.source == lam.range:
            image[:, k] = target.coords[:, idx[g.compose(gamma, lam), b]]
    _, pinv = space.level_pinv(space.cap)
    return image @ pinv, target


def dilation_adjoint(space: DilationSpace, gamma: Path) -> np.ndarray:
    return space.adjoint_op(gamma)


def _maxabs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def compression_residual(space: DilationSpace, paths: list[Path] | None = None) -> float:
    """Worst ``||W_gamma^* restricted to H - V_gamma^*||`` in embedded coordinates."""
    emb = space.embedding()
    worst = 0.0
    for gamma in space.paths if paths is None else paths:
        lhs = space.adjoint_op(gamma) @ emb
        rhs = emb @ space.family.op(gamma).conj().T
        worst = max(worst, _maxabs(lhs - rhs))
    return worst


@dataclass
class DilationReport:
    residuals: dict[str, float]
    witnesses: dict[str, str]

    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)


def _note(rep: DilationReport, key: str, value: float, witness: str) -> None:
    if value > rep.residuals.get(key, -1.0):
        rep.residuals[key] = float(value)
        rep.witnesses[key] = witness


def verify_tck(space: DilationSpace) -> DilationReport:
    """Relations (i)-(v) for ``W`` on the sublevels where they can be evaluated."""
    g = space.family.graph
    n_cap = space.cap
    rep = DilationReport({}, {})
    small = [p for p in g.paths_upto(kg.meet(kg.ones(g.rank), n_cap))]
    verts = [g.vertex(v) for v in g.vertices]
    eye = np.eye(space.rank)

    def below(*degs):
        level = n_cap
        for d in degs:
            level = tuple(a - b for a, b in zip(level, d))
        return space.projection(level)

    for a in verts:
        wa = space.raise_op(a)
        _note(rep, "i", _maxabs(wa @ wa - wa), f"{a}^2")
        _note(rep, "i", _maxabs(wa - wa.conj().T), f"{a}*")
        for b in verts:
            if b != a:
                _note(rep, "i", _maxabs(wa @ space.raise_op(b)), f"{a}{b}")
    total = sum((space.raise_op(a) for a in verts), np.zeros_like(eye))
    _note(rep, "i", _maxabs(total - eye), "sum")

    for lam in small:
        for mu in small:
            p = below(lam.degree, mu.degree)
            lhs = space.raise_op(lam) @ space.raise_op(mu) @ p
            if lam.source == mu.range:
                rhs = space.raise_op(g.compose(lam, mu)) @ p
            else:
                rhs = np.zeros_like(lhs)
            _note(rep, "ii", _maxabs(lhs - rhs), f"{lam}*{mu}")

    for lam in small:
        p = below(lam.degree)
        lhs = space.adjoint_op(lam) @ space.raise_op(lam) @ p
        _note(rep, "iii", _maxabs(lhs - space.raise_op(g.vertex(lam.source)) @ p), str(lam))

    for n in kg.box(kg.meet(kg.ones(g.rank), n_cap)):
        if not any(n):
            continue
        p = below(n)
        for a in verts:
            acc = space.raise_op(a).copy()
            for lam in g.paths(n, range=a.range):
                acc -= space.raise_op(lam) @ space.adjoint_op(lam)
            comp = p @ acc @ p
            comp = 0.5 * (comp + comp.conj().T)
            low = float(hermitian_eig(comp, space.tol)[0][-1]) if comp.size else 0.0
            _note(rep, "iv", max(0.0, -low), f"{n}@{a}")

    for mu in small:
        for nu in small:
            p = below(nu.degree)
            lhs = space.adjoint_op(mu) @ space.raise_op(nu) @ p
            rhs = np.zeros_like(lhs)
            for _, alpha, beta in g.mce(mu, nu):
                rhs += space.raise_op(alpha) @ space.adjoint_op(beta) @ p
            _note(rep, "v", _maxabs(lhs - rhs), f"{mu}^*{nu}")
    return rep


def verify_cuntz_pimsner(space: DilationSpace) -> DilationReport:
    """Fullness ``sum_{lam in Lambda^n_a} W_lam W_lam^* = W_a`` on level ``N - n``."""
    g = space.family.graph
    rep = DilationReport({}, {})
    for n in kg.box(space.cap):
        if not any(n):
            continue
        p = space.projection(kg.subtract(space.cap, n))
        for v in g.vertices:
            acc = space.raise_op(g.vertex(v)).copy()
            for lam in g.paths(n, range=v):
                acc -= space.raise_op(lam) @ space.adjoint_op(lam)
            _note(rep, "fullness", _maxabs(acc @ p), f"{n}@{v}")
    if not rep.residuals:
        rep.residuals["fullness"] = 0.0
        rep.witnesses["fullness"] = ""
    return rep


def commutant(fam: OperatorFamily) -> list[np.ndarray]:
    """Basis of ``{X : X V = V X and X V^* = V^* X}`` over all edge and vertex operators."""
    d = fam.dim
    if d == 0:
        return []
    eye = np.eye(d)
    g = fam.graph
    rows = []
    gens = [fam.op(g.vertex(v)) for v in g.vertices] + [fam.op(g.edge(e)) for e in g.edges]
    for op in gens:
        for m in (op, op.conj().T):
            # vec(X M) - vec(M X) = (M^T kron I - I kron M) vec X
            rows.append(np.kron(m.T, eye) - np.kron(eye, m))
    basis = solve_linear_subspace(np.vstack(rows), fam.tol)
    return [unvec(basis[:, k], d) for k in range(basis.shape[1])]
