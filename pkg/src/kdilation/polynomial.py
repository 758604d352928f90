"""Formal polynomials ``c0 * 1 + sum c[mu, nu] L_mu L_nu^*`` over a graph."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import kgraph as kg
from .kgraph import KGraph, Path


@dataclass(frozen=True)
class PolySpec:
    """A finite linear combination of ``L_mu L_nu^*`` plus a unit term.

    ``terms`` is kept sorted and free of duplicate ``(mu, nu)`` keys.  A
    creation monomial ``L_mu`` is stored as ``(mu, s(mu))``.
    """

    graph: KGraph
    unit: complex = 0.0
    terms: tuple[tuple[Path, Path, complex], ...] = ()

    @classmethod
    def build(
        cls,
        graph: KGraph,
        terms: Iterable[tuple[Path, Path, complex]] = (),
        unit: complex = 0.0,
    ) -> "PolySpec":
        merged: dict[tuple[Path, Path], complex] = {}
        for mu, nu, c in terms:
            merged[mu, nu] = merged.get((mu, nu), 0.0) + complex(c)
        items = sorted(merged.items(), key=lambda kv: (kv[0][0].sort_key(), kv[0][1].sort_key()))
        return cls(graph, complex(unit), tuple((mu, nu, c) for (mu, nu), c in items if c != 0))

    @classmethod
    def monomial(cls, graph: KGraph, mu: Path, nu: Path | None = None, coeff: complex = 1.0) -> "PolySpec":
        """``coeff * L_mu L_nu^*``; with ``nu`` omitted this is ``coeff * L_mu``."""
        if nu is None:
            nu = graph.vertex(mu.source)
        return cls.build(graph, [(mu, nu, coeff)])

    @classmethod
    def identity(cls, graph: KGraph, coeff: complex = 1.0) -> "PolySpec":
        return cls(graph, complex(coeff), ())

    # -- algebra ----------------------------------------------------------

    def __add__(self, other: "PolySpec") -> "PolySpec":
        return PolySpec.build(self.graph, list(self.terms) + list(other.terms), self.unit + other.unit)

    def scale(self, c: complex) -> "PolySpec":
        return PolySpec.build(self.graph, [(m, n, c * v) for m, n, v in self.terms], c * self.unit)

    def adjoint(self) -> "PolySpec":
        return PolySpec.build(
            self.graph, [(n, m, np.conj(v)) for m, n, v in self.terms], np.conj(self.unit)
        )

    def __mul__(self, other: "PolySpec") -> "PolySpec":
        """Product, normalised with ``L_nu^* L_kappa = sum_MCE L_alpha L_beta^*``."""
        g = self.graph
        out: list[tuple[Path, Path, complex]] = []
        for mu, nu, c in self.terms:
            out.append((mu, nu, c * other.unit))
        for ka, ta, c in other.terms:
            out.append((ka, ta, c * self.unit))
        for mu, nu, c1 in self.terms:
            for ka, ta, c2 in other.terms:
                for _, alpha, beta in g.mce(nu, ka):
                    left = g.try_compose(mu, alpha)
                    right = g.try_compose(ta, beta)
                    if left is None or right is None:
                        continue
                    out.append((left, right, c1 * c2))
        return PolySpec.build(g, out, self.unit * other.unit)

    def rotated(self, z: Iterable[complex]) -> "PolySpec":
        """Image under the gauge automorphism: ``L_mu L_nu^* -> z^(deg mu - deg nu) L_mu L_nu^*``."""
        z = np.asarray(list(z), dtype=complex)
        out = []
        for mu, nu, c in self.terms:
            w = np.prod(z ** np.array(mu.degree)) * np.prod(np.conj(z) ** np.array(nu.degree))
            out.append((mu, nu, c * w))
        return PolySpec.build(self.graph, out, self.unit)

    # -- shape information --------------------------------------------------

    def max_out_degree(self) -> kg.Degree:
        deg = kg.zero(self.graph.rank)
        for mu, _, _ in self.terms:
            deg = kg.join(deg, mu.degree)
        return deg

    def max_in_degree(self) -> kg.Degree:
        deg = kg.zero(self.graph.rank)
        for _, nu, _ in self.terms:
            deg = kg.join(deg, nu.degree)
        return deg

    def is_analytic(self) -> bool:
        """True when every term is a pure creation monomial ``L_mu``."""
        return all(nu.is_vertex and nu.range == mu.source for mu, nu, _ in self.terms)

    def __str__(self) -> str:
        parts = []
        if self.unit:
            parts.append(f"{self.unit:.6g}*1")
        for mu, nu, c in self.terms:
            parts.append(f"{c:.6g}*L[{mu}]L[{nu}]^*")
        return " + ".join(parts) if parts else "0"
