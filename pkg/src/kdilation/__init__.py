"""Finite higher-rank graphs, their Fock representations and operator families.

Submodules:
    kgraph: graphs, paths, factorization and minimal common extensions.
    linalg: Jacobi eigensolver, power-iteration norms and Gram factorizations.
    fock: truncated Fock space creation operators and relation checks.
    family: operator families, defect operators and absorption.
    poisson: Poisson transform and the von Neumann inequality check.
    dilation: minimal dilations built from Gram matrices.
    states: fixed points, kernels, Kolmogorov reconstruction and purity.
    characters: one-dimensional families and derivations.
"""

__version__ = "0.1.0"
