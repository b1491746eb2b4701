"""Mimetic spectral element library for Stokes flow on box meshes.

The discretization keeps the grad/curl/div structure exact at the
discrete level, which makes the computed velocity field pointwise
divergence-free on every mesh.
"""

from .basis import (
    EdgeBasis,
    GaussRule,
    GLLRule,
    LagrangeBasis,
    SpectralBasis,
    gauss_rule,
    gll_rule,
    integrate,
    spectral_basis,
)
from .topology import CellComplex, MeshSpec, build_complex
from .mimetic import Cochain, DiscreteField, check_commutation, project, reconstruct, reduce_field
from .assembly import StokesSystem, apply_boundary_conditions, assemble_stokes, mass_matrix
from .solver import StokesSolution, divergence_field, sample, solve
from .analysis import ErrorReport, convergence_study, error_norms, inf_sup_constant
from .cases import StokesCase, get_case

__version__ = "0.1.0"

__all__ = [
    "CellComplex",
    "Cochain",
    "DiscreteField",
    "EdgeBasis",
    "ErrorReport",
    "GaussRule",
    "GLLRule",
    "LagrangeBasis",
    "MeshSpec",
    "SpectralBasis",
    "StokesCase",
    "StokesSolution",
    "StokesSystem",
    "apply_boundary_conditions",
    "assemble_stokes",
    "build_complex",
    "check_commutation",
    "convergence_study",
    "divergence_field",
    "error_norms",
    "gauss_rule",
    "get_case",
    "gll_rule",
    "inf_sup_constant",
    "integrate",
    "mass_matrix",
    "project",
    "reconstruct",
    "reduce_field",
    "sample",
    "solve",
    "spectral_basis",
]
