"""Scalar functionals of a Galerkin state: mass, energy, entropy, negativity."""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from .physics import phi, phi_theta
from .spectral import SpectralField, coeffs_to_values, eigenvalues, half_weights, quadrature


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    energy: float
    entropy: float
    negativity: float
    visc_dissipation: float
    mob_dissipation: float
    min_u: float
    max_u: float

    @classmethod
    def columns(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def as_row(self) -> tuple[float, ...]:
        return astuple(self)

    @property
    def budget(self) -> float:
        """Energy plus accumulated dissipation; non-increasing for the exact dynamics."""
        return self.energy + self.visc_dissipation + self.mob_dissipation


def _values(c: SpectralField) -> np.ndarray:
    return coeffs_to_values(c.coeffs, c.basis)


def mass(c: SpectralField) -> float:
    """``int u dx``, read off the constant mode."""
    return (2.0 * np.pi) ** (c.basis.n / 2) * c.constant_mode()


def gradient_energy(c: SpectralField) -> float:
    """``1/2 int |grad u|^2`` by Parseval."""
    b = c.basis
    return 0.5 * float(np.sum(half_weights(b) * eigenvalues(b) * np.abs(c.coeffs) ** 2))


def energy(c: SpectralField, cfg) -> float:
    """``int kappa/2 |grad u|^2 + W(u) dx``; the potential term by grid quadrature."""
    bulk = quadrature(np.asarray(cfg.potential.w(_values(c)), dtype=float), c.basis)
    return cfg.kappa * gradient_energy(c) + bulk


def entropy_total(c: SpectralField, theta: float | None) -> float:
    """``int Phi_theta(u) dx``; ``theta=None`` uses ``Phi`` and needs ``u > 0``."""
    u = _values(c)
    dens = phi(u) if theta is None else phi_theta(theta, u)
    return quadrature(dens, c.basis)


def negativity(c: SpectralField, theta: float | None) -> float:
    """``int |min(u, 0) + theta|^2 dx`` (``theta=None`` counts as 0)."""
    u = _values(c)
    th = 0.0 if theta is None else theta
    return quadrature((np.minimum(u, 0.0) + th) ** 2, c.basis)


def energy_budget_residual(rec1: DiagnosticsRecord, rec2: DiagnosticsRecord) -> float:
    """Change of energy plus dissipation between two samples of one trajectory."""
    if rec2.t < rec1.t:
        raise ValueError(f"records out of order: t1={rec1.t} > t2={rec2.t}")
    if rec2.visc_dissipation < rec1.visc_dissipation or rec2.mob_dissipation < rec1.mob_dissipation:
        raise ValueError("records do not belong to one trajectory (dissipation decreased)")
    return rec2.budget - rec1.budget


def record(state, cfg) -> DiagnosticsRecord:
    """Every diagnostic of ``state`` in one record."""
    c = state.c
    u = _values(c)
    theta = cfg.mobility.theta
    if theta is None:
        # degenerate mobility: Phi itself, infinite once u touches zero from below
        ent = quadrature(phi(u), c.basis) if u.min() > 0 else math.inf
    else:
        ent = quadrature(phi_theta(theta, u), c.basis)
    th = 0.0 if theta is None else theta
    return DiagnosticsRecord(
        t=float(state.t),
        mass=mass(c),
        energy=cfg.kappa * gradient_energy(c) + quadrature(np.asarray(cfg.potential.w(u), dtype=float), c.basis),
        entropy=ent,
        negativity=quadrature((np.minimum(u, 0.0) + th) ** 2, c.basis),
        visc_dissipation=float(state.visc_dissipation),
        mob_dissipation=float(state.mob_dissipation),
        min_u=float(u.min()),
        max_u=float(u.max()),
    )
