"""Truncated Fock space ``l^2(Lambda)`` and its creation operators.

The truncation keeps the basis vectors ``delta_lambda`` with
``deg(lambda) <= cap`` (a box in the degree lattice).  Relations are only
asserted on *interior* columns, i.e. basis vectors whose images under every
monomial of the relation stay inside the box.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kgraph as kg
from .config import DEFAULT, Tolerances
from .errors import CapTooSmall, NotUnimodular
from .kgraph import KGraph, Path
from .linalg import operator_norm
from .polynomial import PolySpec


@dataclass(frozen=True)
class FockBasis:
    graph: KGraph
    cap: kg.Degree
    paths: tuple[Path, ...]
    index: dict = field(repr=False, compare=False)

    @classmethod
    def build(cls, graph: KGraph, cap) -> "FockBasis":
        cap = kg.as_degree(cap, graph.rank)
        paths = tuple(graph.paths_upto(cap))
        return cls(graph, cap, paths, {p: i for i, p in enumerate(paths)})

    def __len__(self) -> int:
        return len(self.paths)

    def degrees(self) -> np.ndarray:
        return np.array([p.degree for p in self.paths], dtype=int).reshape(len(self.paths), self.graph.rank)

    def interior(self, margin) -> np.ndarray:
        """Mask of basis vectors ``delta_xi`` with ``deg(xi) + margin <= cap``."""
        margin = np.asarray(margin, dtype=int)
        return np.all(self.degrees() + margin <= np.asarray(self.cap), axis=1)


@dataclass(frozen=True)
class SparseOperator:
    """A matrix between two truncated Fock bases (rows index the codomain)."""

    domain: FockBasis
    codomain: FockBasis
    matrix: sp.csr_matrix

    def entries(self) -> list[tuple[int, int, complex]]:
        coo = self.matrix.tocoo()
        return sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def nnz(self) -> int:
        return int(self.matrix.count_nonzero())


def _square(b: FockBasis, rows, cols, vals, codomain: FockBasis | None = None) -> SparseOperator:
    cod = b if codomain is None else codomain
    m = sp.csr_matrix(
        (np.asarray(vals, dtype=complex), (np.asarray(rows, dtype=int), np.asarray(cols, dtype=int))),
        shape=(len(cod), len(b)),
    )
    return SparseOperator(b, cod, m)


def creation(b: FockBasis, lam: Path, codomain: FockBasis | None = None) -> SparseOperator:
    """Matrix of ``L_lam`` from ``b`` into ``codomain`` (default ``b``); overflow is dropped."""
    cod = b if codomain is None else codomain
    g = b.graph
    rows, cols = [], []
    for j, mu in enumerate(b.paths):
        if mu.range != lam.source:
            continue
        i = cod.index.get(g.compose(lam, mu))
        if i is not None:
            rows.append(i)
            cols.append(j)
    return _square(b, rows, cols, [1.0] * len(rows), cod)


def vacuum_projection(b: FockBasis, j: int) -> SparseOperator:
    """Projection onto ``delta_lambda`` with ``deg(lambda)_j == 0`` (colour ``j`` is 1-based)."""
    keep = [i for i, p in enumerate(b.paths) if p.degree[j - 1] == 0]
    return _square(b, keep, keep, [1.0] * len(keep))


def gauge_unitary(b: FockBasis, z, tol: Tolerances = DEFAULT) -> SparseOperator:
    """Diagonal unitary ``U_z delta_lambda = z^deg(lambda) delta_lambda``."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.size != b.graph.rank:
        raise NotUnimodular(f"need {b.graph.rank} phases, got {z.size}")
    if np.any(np.abs(np.abs(z) - 1.0) > tol.unimodular):
        raise NotUnimodular(f"phases {z.tolist()} are not unimodular")
    vals = [np.prod(z ** np.array(p.degree)) for p in b.paths]
    idx = list(range(len(b)))
    return _square(b, idx, idx, vals)


@dataclass
class RelationReport:
    """Worst residual per relation family, with a witness for each."""

    residuals: dict[str, float]
    witnesses: dict[str, str]
    checked: dict[str, int]
    notes: dict[str, float] = field(default_factory=dict)

    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def ok(self, tol: float = 0.0) -> bool:
        return self.max_residual() <= tol


def _track(report: RelationReport, key: str, value: float, witness: str) -> None:
    report.checked[key] = report.checked.get(key, 0) + 1
    if value > report.residuals.get(key, -1.0):
        report.residuals[key] = float(value)
        report.witnesses[key] = witness


def _col_norm(m: sp.spmatrix, mask: np.ndarray) -> float:
    sub = m[:, np.flatnonzero(mask)]
    return float(np.max(np.abs(sub.toarray()))) if sub.nnz else 0.0


def tck_check(b: FockBasis, relation_degree=None) -> RelationReport:
    """Check the Toeplitz-Cuntz-Krieger relations for the truncated ``L``.

    Relations are checked for all paths with degree ``<= relation_degree``
    (default ``(1, ..., 1)``) and only on interior columns.  Relation (iv)
    is checked as an operator inequality (its residual is the most negative
    eigenvalue, clipped at zero); the exact fullness defect
    ``L_a - sum L_lam L_lam^*`` is also compared against the projection onto
    ``{delta_mu : r(mu) = a, deg(mu) not >= n}`` and recorded under
    ``"iv_defect_identity"``; ``"iv_equality_gap"`` records how far (iv) is
    from equality, which is never zero on the Fock space because the vertex
    vectors are not in the range of any edge.
    """
    g = b.graph
    r = g.rank
    rel = kg.ones(r) if relation_degree is None else kg.as_degree(relation_degree, r)
    small = g.paths_upto(rel)
    L = {p: creation(b, p).matrix for p in small}
    report = RelationReport({}, {}, {})
    n = len(b)
    full = np.ones(n, dtype=bool)

    # (i) vertex projections
    verts = [g.vertex(v) for v in g.vertices]
    for a in verts:
        la = L[a]
        _track(report, "i", _col_norm(la @ la - la, full), f"{a}^2")
        _track(report, "i", _col_norm(la - la.conj().T, full), f"{a}*")
        for c in verts:
            if c != a:
                _track(report, "i", _col_norm(la @ L[c], full), f"{a}{c}")

    # (ii) multiplicativity
    for lam in small:
        for mu in small:
            mask = b.interior(kg.add(lam.degree, mu.degree))
            prod = L[lam] @ L[mu]
            if lam.source == mu.range:
                target = creation(b, g.compose(lam, mu)).matrix
            else:
                target = sp.csr_matrix((n, n), dtype=complex)
            _track(report, "ii", _col_norm(prod - target, mask), f"{lam}*{mu}")

    # (iii) L^* L = L_s
    for lam in small:
        mask = b.interior(lam.degree)
        lhs = L[lam].conj().T @ L[lam]
        _track(report, "iii", _col_norm(lhs - L[g.vertex(lam.source)], mask), str(lam))

    # (iv) L_a >= sum over Lambda^n_a of L L^*  (L L^* is exact on the whole box)
    from .linalg import psd_min_eig

    for deg in kg.box(rel):
        if not any(deg):
            continue
        for v in g.vertices:
            a = g.vertex(v)
            fam = g.paths(deg, range=v)
            diff = L[a].copy()
            for lam in fam:
                lam_op = L[lam] if lam in L else creation(b, lam).matrix
                diff = diff - lam_op @ lam_op.conj().T
            dense = diff.toarray()
            offdiag = dense - np.diag(np.diag(dense))
            if np.any(offdiag):
                low = psd_min_eig(dense)
            else:
                low = float(np.min(np.real(np.diag(dense)))) if n else 0.0
            _track(report, "iv", max(0.0, -low), f"{deg}@{v}")
            expected = np.zeros(n)
            for i, p in enumerate(b.paths):
                if p.range == v and not kg.leq(deg, p.degree):
                    expected[i] = 1.0
            notes = report.notes
            notes["iv_defect_identity"] = max(
                notes.get("iv_defect_identity", 0.0), float(np.max(np.abs(dense - np.diag(expected))))
            )
            notes["iv_equality_gap"] = max(notes.get("iv_equality_gap", 0.0), float(np.max(np.abs(dense))))

    # (v) L_mu^* L_nu = sum over MCE of L_alpha L_beta^*
    for mu in small:
        for nu in small:
            mask = b.interior(kg.join(mu.degree, nu.degree))
            lhs = L[mu].conj().T @ L[nu]
            rhs = sp.csr_matrix((n, n), dtype=complex)
            for _, alpha, beta in g.mce(mu, nu):
                la = L.get(alpha)
                lb = L.get(beta)
                la = la if la is not None else creation(b, alpha).matrix
                lb = lb if lb is not None else creation(b, beta).matrix
                rhs = rhs + la @ lb.conj().T
            _track(report, "v", _col_norm(lhs - rhs, mask), f"{mu}^*{nu}")
    return report


def vacuum_identity_residual(b: FockBasis, j: int) -> float:
    """Residual of ``P_j = I - sum_{deg lam = e_j} L L^*`` on interior columns."""
    g = b.graph
    n = len(b)
    diff = sp.identity(n, dtype=complex, format="csr") - vacuum_projection(b, j).matrix
    for lam in g.paths(kg.unit(g.rank, j)):
        op = creation(b, lam).matrix
        diff = diff - op @ op.conj().T
    return _col_norm(diff, b.interior(kg.unit(g.rank, j)))


def gauge_covariance_residual(b: FockBasis, lam: Path, z, tol: Tolerances = DEFAULT) -> float:
    """``max |U_z L U_z^* - z^deg(lam) L|`` over all entries of the truncated ``L``."""
    u = gauge_unitary(b, z, tol).matrix
    op = creation(b, lam).matrix
    factor = np.prod(np.asarray(z, dtype=complex) ** np.array(lam.degree))
    diff = (u @ op @ u.conj().T - factor * op).toarray()
    return float(np.max(np.abs(diff))) if diff.size else 0.0


def polynomial_matrix(b_in: FockBasis, p: PolySpec, b_out: FockBasis) -> sp.csr_matrix:
    """Exact matrix of ``p(L)`` restricted to ``b_in`` with values in ``b_out``."""
    g = b_in.graph
    rows, cols, vals = [], [], []
    for j, xi in enumerate(b_in.paths):
        if p.unit:
            i = b_out.index.get(xi)
            if i is None:
                raise CapTooSmall(f"output cap {b_out.cap} cannot hold {xi}")
            rows.append(i)
            cols.append(j)
            vals.append(p.unit)
        for mu, nu, c in p.terms:
            if mu.source != nu.source or not kg.leq(nu.degree, xi.degree):
                continue
            head, tail = g.factorize(xi, nu.degree)
            if head != nu:
                continue
            out = g.compose(mu, tail)
            i = b_out.index.get(out)
            if i is None:
                raise CapTooSmall(f"output cap {b_out.cap} cannot hold {out}")
            rows.append(i)
            cols.append(j)
            vals.append(c)
    return sp.csr_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(len(b_out), len(b_in)))


def restricted_norm(b_in: FockBasis, p: PolySpec, out_cap=None, tol: Tolerances = DEFAULT) -> float:
    """``||p(L)|_span{delta_lam : deg(lam) <= N}||`` computed without output truncation."""
    g = b_in.graph
    needed = kg.add(b_in.cap, p.max_out_degree())
    if out_cap is None:
        out_cap = needed
    out_cap = kg.as_degree(out_cap, g.rank)
    if not kg.leq(needed, out_cap):
        raise CapTooSmall(f"output cap {out_cap} is below the required {needed}")
    b_out = FockBasis.build(g, out_cap)
    a = polynomial_matrix(b_in, p, b_out)
    # ||A||^2 is the top eigenvalue of the (small) domain Gram matrix
    gram = (a.conj().T @ a).toarray()
    return float(np.sqrt(operator_norm(gram, tol)))


def exact_fock_norm(p: PolySpec) -> float | None:
    """Closed-form ``||p(L)||`` where one is available, else ``None``.

    Two families are covered: a single monomial ``c L_mu L_nu^*`` (norm
    ``|c|`` when ``s(mu) = s(nu)``, else 0), and analytic polynomials whose
    monomials share one degree, where the ranges of the ``L_mu`` are
    orthogonal and the norm is ``max_b sqrt(sum_{s(mu)=b} |c_mu|^2)``.
    """
    if p.unit != 0:
        return None if p.terms else abs(p.unit)
    if not p.terms:
        return 0.0
    if len(p.terms) == 1:
        mu, nu, c = p.terms[0]
        return abs(c) if mu.source == nu.source else 0.0
    if not p.is_analytic():
        return None
    degrees = {mu.degree for mu, _, _ in p.terms}
    if len(degrees) != 1:
        return None
    weight: dict[str, float] = {}
    for mu, _, c in p.terms:
        weight[mu.source] = weight.get(mu.source, 0.0) + abs(c) ** 2
    return float(np.sqrt(max(weight.values())))
