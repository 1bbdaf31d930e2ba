"""Galerkin dynamics of the viscous Cahn-Hilliard equation.

With ``u = sum c_k phi_k`` and ``mu = sum d_k phi_k`` the truncated system is

    dc/dt = -A(c) d,        d = kappa * Lambda c + w(c) + alpha * dc/dt,

where ``A(c)_{jk} = int M(u) grad phi_k . conj(grad phi_j)``, ``Lambda`` holds
the eigenvalues ``|k|^2`` and ``w(c)_j = <W'(u), phi_j>``.  Eliminating ``d``
gives the symmetric positive definite system

    (I + alpha A(c)) dc/dt = -A(c) (kappa Lambda c + w(c)),

solved matrix-free by preconditioned conjugate gradients.  Time stepping is
the implicit midpoint rule.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import diagnostics
from .physics import MobilitySpec, QuarticWell, ZeroPotential
from .spectral import (
    BasisSpec,
    GridField,
    SpectralField,
    coeffs_to_values,
    dealias_mask,
    eigenvalues,
    half_weights,
    mode_mask,
    project_initial,
    quadrature,
    values_to_coeffs,
    wavenumbers,
)

log = logging.getLogger(__name__)

BLOWUP_LIMIT = 1e8


class SolverError(RuntimeError):
    """Base class for failures of the time integrator."""


class NumericalBlowUp(SolverError):
    pass


class CGNotConverged(SolverError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"CG did not converge in {iterations} iterations (relative residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


class StepRejected(SolverError):
    pass


@dataclass(frozen=True)
class PhysicsSpec:
    potential: QuarticWell | ZeroPotential = QuarticWell()
    mobility: MobilitySpec = MobilitySpec()


@dataclass(frozen=True)
class SolverConfig:
    kappa: float
    alpha: float
    physics: PhysicsSpec
    basis: BasisSpec
    dt: float
    t_end: float
    cg_tol: float = 1e-12
    cg_maxiter: int = 500
    picard_tol: float = 1e-12
    picard_max: int = 60
    max_halvings: int = 20
    dealias: bool = True

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        # alpha = 0 is the classical Cahn-Hilliard limit; still well posed here
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if not (self.dt > 0 and self.cg_tol > 0 and self.picard_tol > 0):
            raise ValueError("dt, cg_tol and picard_tol must be positive")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")

    @property
    def potential(self):
        return self.physics.potential

    @property
    def mobility(self) -> MobilitySpec:
        return self.physics.mobility

    @property
    def n_steps(self) -> int:
        steps = round(self.t_end / self.dt)
        if abs(steps * self.dt - self.t_end) > 1e-9 * max(self.t_end, 1.0):
            raise ValueError(f"t_end={self.t_end} is not a whole number of steps dt={self.dt}")
        return steps

    def with_mobility(self, mobility: MobilitySpec) -> "SolverConfig":
        return replace(self, physics=replace(self.physics, mobility=mobility))


@dataclass
class SolverState:
    t: float
    c: SpectralField
    visc_dissipation: float = 0.0
    mob_dissipation: float = 0.0
    # last midpoint rate, reused as a warm start; not part of the state proper
    rate: np.ndarray | None = field(default=None, repr=False, compare=False)


@dataclass
class MuCoefficients:
    d: SpectralField


# -- internal array kernels -------------------------------------------------


def _check_finite(values: np.ndarray, what: str):
    if not np.all(np.isfinite(values)):
        raise NumericalBlowUp(f"non-finite values in {what}")
    if np.abs(values).max(initial=0.0) > BLOWUP_LIMIT:
        raise NumericalBlowUp(f"{what} exceeded {BLOWUP_LIMIT:g} in magnitude")


class _Frozen:
    """Quantities of a fixed state ``c`` shared by repeated operator applications."""

    def __init__(self, c: np.ndarray, cfg: SolverConfig):
        basis = cfg.basis
        self.cfg = cfg
        self.basis = basis
        self.ks = wavenumbers(basis)
        self.lam = eigenvalues(basis)
        self.keep = dealias_mask(basis) if cfg.dealias else mode_mask(basis)
        self.u = coeffs_to_values(c, basis)
        _check_finite(self.u, "phase field")
        self.mob = np.asarray(cfg.mobility(self.u), dtype=float)
        self.mean_mob = float(self.mob.mean())

    def stiffness(self, d: np.ndarray) -> np.ndarray:
        """``A(c) d = -P div(M(u) grad mu)`` with ``mu`` given by ``d``."""
        out = np.zeros_like(d)
        d = np.where(self.keep, d, 0.0)
        for k in self.ks:
            grad = coeffs_to_values(1j * k * d, self.basis)
            flux = values_to_coeffs(self.mob * grad, self.basis)
            out -= 1j * k * flux
        _check_finite(out.view(float), "mobility flux")
        return np.where(self.keep, out, 0.0)

    def potential_coeffs(self) -> np.ndarray:
        wp = np.asarray(self.cfg.potential.w_prime(self.u), dtype=float)
        _check_finite(wp, "W'(u)")
        return np.where(self.keep, values_to_coeffs(wp, self.basis), 0.0)

    def preconditioner(self) -> np.ndarray:
        return 1.0 / (1.0 + self.cfg.alpha * self.mean_mob * self.lam)

    def flux_dissipation(self, d: np.ndarray) -> float:
        """Quadrature of ``M(u) |grad mu|^2``."""
        total = np.zeros(self.basis.grid_shape)
        for k in self.ks:
            total += coeffs_to_values(1j * k * d, self.basis) ** 2
        return quadrature(self.mob * total, self.basis)


def conjugate_gradient(apply, b, weights, precond=None, x0=None, tol=1e-12, maxiter=500):
    """Preconditioned CG for a self-adjoint positive definite ``apply``.

    Vectors are half-spectrum arrays; the inner product is
    ``Re sum(weights * conj(x) * y)``.  Stops when the residual norm falls
    below ``tol * ||b||``.
    """

    def dot(x, y):
        return float(np.sum(weights * (x.conj() * y).real))

    bnorm = math.sqrt(dot(b, b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    if precond is None:
        precond = np.ones(b.shape)
    if x0 is None:
        x = np.zeros_like(b)
        r = b.copy()
    else:
        x = x0.copy()
        r = b - apply(x)
    z = precond * r
    p = z.copy()
    rz = dot(r, z)
    for it in range(maxiter + 1):
        rnorm = math.sqrt(dot(r, r))
        if rnorm <= tol * bnorm:
            return x, it
        if it == maxiter:
            break
        Ap = apply(p)
        step = rz / dot(p, Ap)
        x += step * p
        r -= step * Ap
        z = precond * r
        rz_new = dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise CGNotConverged(rnorm / bnorm, maxiter)


def _rate(c: np.ndarray, cfg: SolverConfig, x0=None) -> tuple[np.ndarray, _Frozen, np.ndarray]:
    """Time derivative of the coefficients at ``c``; also returns ``kappa Lambda c + w(c)``."""
    op = _Frozen(c, cfg)
    g = cfg.kappa * op.lam * c + op.potential_coeffs()
    g = np.where(op.keep, g, 0.0)
    b = -op.stiffness(g)
    if cfg.alpha == 0.0:
        return b, op, g
    alpha = cfg.alpha
    x, _ = conjugate_gradient(
        lambda v: v + alpha * op.stiffness(v),
        b,
        half_weights(cfg.basis),
        precond=op.preconditioner(),
        x0=x0,
        tol=cfg.cg_tol,
        maxiter=cfg.cg_maxiter,
    )
    return x, op, g


# -- public operations ------------------------------------------------------


def apply_mobility_stiffness(d: SpectralField, c: SpectralField, cfg: SolverConfig) -> SpectralField:
    """Matrix-free product ``A(c) d``."""
    if d.basis != c.basis or c.basis != cfg.basis:
        raise ValueError("d, c and the configuration must share a basis")
    return SpectralField(cfg.basis, _Frozen(c.coeffs, cfg).stiffness(d.coeffs))


def mu_coefficients(c: SpectralField, c_dot: SpectralField, cfg: SolverConfig) -> MuCoefficients:
    """Chemical potential coefficients ``d = kappa Lambda c + w(c) + alpha dc/dt``."""
    op = _Frozen(c.coeffs, cfg)
    d = cfg.kappa * op.lam * c.coeffs + op.potential_coeffs() + cfg.alpha * c_dot.coeffs
    return MuCoefficients(SpectralField(cfg.basis, np.where(op.keep, d, 0.0)))


def rhs_solve(c: SpectralField, cfg: SolverConfig, method: str = "cg") -> SpectralField:
    """Solve ``(I + alpha A) dc/dt = -A (kappa Lambda c + w)`` for ``dc/dt``.

    ``method="direct"`` skips the linear solve and is only valid for
    ``alpha == 0``, where the system reduces to ``dc/dt = -A (...)``.
    """
    if method == "direct":
        if cfg.alpha != 0.0:
            raise ValueError("the direct path requires alpha == 0")
        op = _Frozen(c.coeffs, cfg)
        g = np.where(op.keep, cfg.kappa * op.lam * c.coeffs + op.potential_coeffs(), 0.0)
        return SpectralField(cfg.basis, -op.stiffness(g))
    if method != "cg":
        raise ValueError(f"unknown method {method!r}")
    rate, _, _ = _rate(c.coeffs, cfg)
    return SpectralField(cfg.basis, rate)


def _linear_stiffness(op: _Frozen) -> np.ndarray:
    # dominant linear part of the rate; used only to precondition the fixed-point map
    m = op.mean_mob
    return op.cfg.kappa * m * op.lam**2 / (1.0 + op.cfg.alpha * m * op.lam)


def step(state: SolverState, cfg: SolverConfig, dt: float | None = None) -> SolverState:
    """One implicit midpoint step ``c+ = c + dt * F((c + c+)/2)``.

    The midpoint ``y`` solves ``y = c + dt/2 F(y)``.  It is found by the
    fixed-point iteration

        (1 + dt/2 L) y_new = c + dt/2 (F(y) + L y)

    with ``L`` the diagonal linear part of ``F`` at the start of the step.
    Its fixed point is the midpoint equation's; ``L`` only damps the stiff
    modes so that the iteration contracts at the step sizes the scheme is
    run at.  Raises :class:`StepRejected` if it fails to converge.
    """
    dt = cfg.dt if dt is None else dt
    c = state.c.coeffs
    weights = half_weights(cfg.basis)
    norm_c = math.sqrt(float(np.sum(weights * np.abs(c) ** 2)))
    tol = cfg.picard_tol * max(norm_c, np.finfo(float).tiny)

    try:
        op0 = _Frozen(c, cfg)
        if state.rate is not None and state.rate.shape == c.shape:
            guess = state.rate
        else:
            guess, op0, _ = _rate(c, cfg)
        L = _linear_stiffness(op0)
        denom = 1.0 + 0.5 * dt * L
        y = c + 0.5 * dt * guess
        rate = guess
        first = None
        for it in range(cfg.picard_max):
            rate, op, g = _rate(y, cfg, x0=rate)
            y_new = (c + 0.5 * dt * (rate + L * y)) / denom
            delta = math.sqrt(float(np.sum(weights * np.abs(y_new - y) ** 2)))
            if delta <= tol:
                break
            if first is None:
                first = delta
            elif not delta < 1e3 * first:
                raise StepRejected(f"fixed-point iteration diverging at dt={dt:g}")
            y = y_new
        else:
            raise StepRejected(f"fixed-point iteration not converged in {cfg.picard_max} iterations at dt={dt:g}")
    except CGNotConverged as exc:
        raise StepRejected(str(exc)) from exc

    c_new = c + dt * rate
    d = g + cfg.alpha * rate
    visc = cfg.alpha * float(np.sum(weights * np.abs(rate) ** 2))
    mob = op.flux_dissipation(d)
    return SolverState(
        t=state.t + dt,
        c=SpectralField(cfg.basis, c_new),
        visc_dissipation=state.visc_dissipation + dt * visc,
        mob_dissipation=state.mob_dissipation + dt * mob,
        rate=rate,
    )


def _advance(state: SolverState, cfg: SolverConfig, dt: float, depth: int = 0) -> SolverState:
    try:
        return step(state, cfg, dt)
    except StepRejected:
        if depth >= cfg.max_halvings:
            raise
        log.debug("step rejected at t=%g, halving dt to %g", state.t, dt / 2)
        half = _advance(state, cfg, dt / 2, depth + 1)
        return _advance(half, cfg, dt / 2, depth + 1)


@dataclass
class Trajectory:
    config: SolverConfig
    states: list[SolverState]
    records: list["diagnostics.DiagnosticsRecord"]
    complete: bool = True
    error: str | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def final(self) -> SolverState:
        return self.states[-1]


def initial_state(u0: GridField, cfg: SolverConfig) -> SolverState:
    return SolverState(t=0.0, c=project_initial(u0, cfg.basis))


def integrate(u0: GridField, cfg: SolverConfig, sample_every: int = 1) -> Trajectory:
    """Project ``u0`` and integrate to ``cfg.t_end``, sampling diagnostics.

    Samples are taken at ``t = 0``, every ``sample_every`` steps and at the
    final time.  A rejected step is retried as two half steps, recursively up
    to ``cfg.max_halvings`` times.  On an unrecoverable failure the partial
    trajectory is returned with ``complete=False``.
    """
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    n_steps = cfg.n_steps
    state = initial_state(u0, cfg)
    traj = Trajectory(cfg, [state], [diagnostics.record(state, cfg)])
    for i in range(1, n_steps + 1):
        try:
            state = _advance(state, cfg, cfg.dt)
        except SolverError as exc:
            log.warning("integration aborted at t=%g: %s", state.t, exc)
            traj.complete = False
            traj.error = f"t={state.t:.6g}: {exc}"
            return traj
        state.t = i * cfg.dt
        if i % sample_every == 0 or i == n_steps:
            traj.states.append(state)
            traj.records.append(diagnostics.record(state, cfg))
    return traj
