"""The Poisson transform ``L_mu L_nu^* -> V_mu V_nu^*`` and its variants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kgraph as kg
from .errors import CheckFailure, NotInvariant
from .family import OperatorFamily, popescu_check
from .fock import FockBasis, exact_fock_norm, restricted_norm
from .linalg import operator_norm
from .polynomial import PolySpec

__all__ = [
    "PolySpec",
    "poisson_apply",
    "poisson_s_apply",
    "vn_report",
    "VNReport",
    "cuntz_welldefined_check",
    "CuntzReport",
    "weighted_poisson",
]

STAGNATION = 1e-10


def poisson_s_apply(fam: OperatorFamily, p: PolySpec, s: float) -> np.ndarray:
    """``c0 I + sum c s^(|mu|+|nu|) V_mu V_nu^*``."""
    out = p.unit * np.eye(fam.dim, dtype=complex)
    for mu, nu, c in p.terms:
        out += c * s ** (mu.length + nu.length) * (fam.op(mu) @ fam.op(nu).conj().T)
    return out


def poisson_apply(fam: OperatorFamily, p: PolySpec) -> np.ndarray:
    return poisson_s_apply(fam, p, 1.0)


@dataclass
class VNReport:
    norm_pV: float
    lower_bounds: list[float]
    exact_norm: float | None
    stagnated: bool
    verdict: str


def vn_report(fam: OperatorFamily, p: PolySpec, n_max, check_popescu: bool = True) -> VNReport:
    """Compare ``||p(V)||`` with the Fock norm ``||p(L)||``.

    The Fock side is a nondecreasing sequence of exact restricted norms over
    boxes of growing size.  ``PASS`` means the inequality is certified (by an
    exact Fock norm, or because some lower bound already dominates);
    ``VIOLATION`` needs a stagnated sequence that stays below ``||p(V)||``;
    everything else is ``CONSISTENT``.
    """
    g = fam.graph
    if check_popescu and not popescu_check(fam).popescu_pass:
        raise CheckFailure("the family fails the defect positivity condition", witness={"check": "popescu"})
    n_max = kg.as_degree(n_max, g.rank)
    norm_pv = operator_norm(poisson_apply(fam, p), fam.tol) if fam.dim else 0.0
    bounds = []
    for k in range(max(n_max, default=0) + 1):
        cap = tuple(min(k, c) for c in n_max)
        bounds.append(restricted_norm(FockBasis.build(g, cap), p, tol=fam.tol))
    exact = exact_fock_norm(p)
    slack = 1e-9
    stagnated = len(bounds) >= 3 and all(abs(bounds[-i] - bounds[-i - 1]) < STAGNATION for i in (1, 2))
    if exact is not None:
        verdict = "PASS" if norm_pv <= exact * (1 + slack) + slack else "VIOLATION"
    elif norm_pv <= bounds[-1] * (1 + slack) + slack:
        verdict = "PASS"
    elif stagnated:
        verdict = "VIOLATION"
    else:
        verdict = "CONSISTENT"
    return VNReport(norm_pv, bounds, exact, stagnated, verdict)


@dataclass
class CuntzReport:
    max_residual: float
    witness: str | None
    applicable: bool


def cuntz_welldefined_check(fam: OperatorFamily) -> CuntzReport:
    """Worst ``||V_mu V_nu^* - sum_{deg gamma = e_j} V_{mu gamma} V_{nu gamma}^*||``.

    For a family that is not row-isometric the residual is still reported
    but ``applicable`` is false.
    """
    g = fam.graph
    small = g.paths_upto(kg.ones(g.rank))
    worst, witness = 0.0, None
    for j in range(1, g.rank + 1):
        ej = kg.unit(g.rank, j)
        for mu in small:
            for nu in small:
                lhs = fam.op(mu) @ fam.op(nu).conj().T
                for gamma in g.paths(ej):
                    left = g.try_compose(mu, gamma)
                    right = g.try_compose(nu, gamma)
                    if left is None or right is None:
                        continue
                    lhs = lhs - fam.op(left) @ fam.op(right).conj().T
                res = operator_norm(lhs, fam.tol) if fam.dim else 0.0
                if res > worst:
                    worst, witness = res, f"{mu},{nu},color {j}"
    return CuntzReport(worst, witness, fam.is_isometry)


def invariance_residual(fam: OperatorFamily, d: np.ndarray) -> tuple[float, str | None]:
    """Worst ``||sum_{deg lam = n} V_lam D V_lam^* - D||`` over ``n = 0, e_1, .., e_r``."""
    g = fam.graph
    d = np.asarray(d, dtype=complex)
    worst, witness = 0.0, None
    for n in [kg.zero(g.rank)] + [kg.unit(g.rank, j) for j in range(1, g.rank + 1)]:
        acc = np.zeros_like(d)
        for lam in g.paths(n):
            v = fam.op(lam)
            acc += v @ d @ v.conj().T
        res = float(np.max(np.abs(acc - d))) if d.size else 0.0
        if res > worst:
            worst, witness = res, str(n)
    return worst, witness


def weighted_poisson(fam: OperatorFamily, d: np.ndarray, p: PolySpec) -> np.ndarray:
    """``c0 D + sum c V_mu D V_nu^*`` for an invariant positive weight ``D``."""
    d = np.asarray(d, dtype=complex)
    if d.shape != (fam.dim, fam.dim):
        from .errors import ShapeMismatch

        raise ShapeMismatch(f"weight must be {fam.dim}x{fam.dim}, got {d.shape}")
    res, witness = invariance_residual(fam, d)
    if res > 1e-9:
        raise NotInvariant(f"weight is not invariant at degree {witness} ({res:.3e})", witness={"degree": witness, "residual": res})
    out = p.unit * d
    for mu, nu, c in p.terms:
        out = out + c * (fam.op(mu) @ d @ fam.op(nu).conj().T)
    return out
