"""Spectral Galerkin solver for the viscous Cahn-Hilliard equation with degenerate mobility."""
from .galerkin import (
    PhysicsSpec,
    SolverConfig,
    SolverState,
    Trajectory,
    apply_mobility_stiffness,
    integrate,
    mu_coefficients,
    rhs_solve,
    step,
)
from .physics import EntropySpec, MobilitySpec, QuarticWell, ZeroPotential
from .spectral import BasisSpec, GridField, SpectralField

__version__ = "0.1.0"
