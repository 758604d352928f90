"""Numerical tolerances shared by every check in the package.

All slack accounting goes through one :class:`Tolerances` record so that a
report can embed exactly the configuration it was produced under.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # ||A - A*||_F <= hermitian * ||A||_F
    hermitian: float = 1e-12
    # Jacobi stopping criterion: off(A) <= eig_offdiag * ||A||_F
    eig_offdiag: float = 1e-11
    max_sweeps: int = 100
    # power iteration relative step tolerance
    norm_rel: float = 1e-12
    norm_max_iter: int = 20000
    # PSD iff min eig >= -psd * max(1, ||A||)
    psd: float = 1e-10
    # rank: eigenvalues > rank * max eig are kept
    rank: float = 1e-10
    # kernel threshold for solve_linear_subspace, relative to max(1, ||M*M||)
    kernel: float = 1e-10
    # square consistency and isometry flag
    relation: float = 1e-10
    gram_entry: float = 1e-9
    dilation: float = 1e-9
    unimodular: float = 1e-12
    character: float = 1e-12

    def replace(self, **overrides: float) -> "Tolerances":
        names = {f.name: f.type for f in dataclasses.fields(self)}
        clean = {}
        for key, value in overrides.items():
            if key not in names:
                raise KeyError(f"unknown tolerance {key!r}")
            current = getattr(self, key)
            clean[key] = int(value) if isinstance(current, int) else float(value)
        return dataclasses.replace(self, **clean)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT = Tolerances()
