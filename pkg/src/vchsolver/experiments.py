"""Limit processes as experiments: cutoff sweep and Galerkin refinement."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .galerkin import SolverConfig, Trajectory, integrate
from .physics import MobilitySpec, phi
from .spectral import BasisSpec, GridField, SpectralField, change_basis, l2_norm, quadrature, to_grid

log = logging.getLogger(__name__)

THREADS_ENV = "VCH_THREADS"


class PreconditionError(ValueError):
    """Experiment input violates a hypothesis the check relies on."""


def negativity_scale(theta: float) -> float:
    """``theta^2 + theta + theta^(1/2)``."""
    return theta * theta + theta + math.sqrt(theta)


@dataclass(frozen=True)
class SweepPlan:
    """A family of runs sharing one base configuration.

    ``u0`` is an expression string (see :mod:`vchsolver.expr`), a callable
    ``f(x[, y])`` sampled on each run's own grid, or a :class:`~pathlib.Path`
    to a field snapshot, which is truncated or zero-padded to each basis.
    """

    base: SolverConfig
    u0: str | object
    theta_list: tuple[float, ...] = (0.1, 0.05, 0.025, 0.0125)
    n_list: tuple[int, ...] = (16, 32, 64)
    sample_every: int = 10
    include_degenerate: bool = True
    eps_neg: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        thetas = tuple(float(t) for t in self.theta_list)
        object.__setattr__(self, "theta_list", thetas)
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if any(not 0.0 < t < 1.0 for t in thetas):
            raise ValueError(f"every theta must satisfy 0<theta<1, got {thetas}")
        if any(b >= a for a, b in zip(thetas, thetas[1:])):
            raise ValueError(f"theta_list must be strictly decreasing, got {thetas}")
        if any(b < a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ValueError(f"n_list must be increasing, got {self.n_list}")

    def initial_field(self, basis: BasisSpec) -> GridField:
        if isinstance(self.u0, Path):
            from .storage import read_snapshot

            snap, _ = read_snapshot(self.u0)
            return to_grid(change_basis(snap, basis))
        if isinstance(self.u0, str):
            from .expr import evaluate

            return GridField(basis, evaluate(self.u0, basis, seed=self.seed))
        return GridField.from_function(basis, self.u0)


@dataclass
class RunResult:
    label: str
    theta: float | None
    n_modes: int
    trajectory: Trajectory

    @property
    def complete(self) -> bool:
        return self.trajectory.complete

    def max_negativity(self) -> float:
        return max(r.negativity for r in self.trajectory.records)

    def min_u(self) -> float:
        return min(r.min_u for r in self.trajectory.records)


@dataclass
class SweepReport:
    kind: str
    runs: list[RunResult]
    gaps: list[tuple[str, str, float]] = field(default_factory=list)
    u0_l2: float = float("nan")
    u0_min: float = float("nan")
    u0_entropy: float | None = None
    eps_neg: float = 1e-3
    degenerate_gap: float | None = None

    @property
    def complete(self) -> bool:
        return all(r.complete for r in self.runs)

    def run(self, label: str) -> RunResult:
        for r in self.runs:
            if r.label == label:
                return r
        raise KeyError(label)

    @property
    def theta_runs(self) -> list[RunResult]:
        return [r for r in self.runs if r.theta is not None]

    def gap_values(self) -> list[float]:
        return [g for _, _, g in self.gaps]

    def negativity_table(self) -> list[tuple[float, float, float]]:
        """``(theta, max_t negativity, ratio to theta^2+theta+theta^(1/2))`` per run."""
        return [(r.theta, m := r.max_negativity(), m / negativity_scale(r.theta)) for r in self.theta_runs]

    def fitted_constant(self) -> float:
        """Negativity constant calibrated on the largest theta."""
        _, _, ratio = self.negativity_table()[0]
        return ratio

    def entropy_constant(self) -> float:
        """Smallest ``K >= 0`` with entropy below ``int Phi(u0) + K theta^(-1/2)`` on the largest-theta run."""
        if self.u0_entropy is None:
            raise PreconditionError("entropy bound needs strictly positive initial data")
        first = self.theta_runs[0]
        excess = max(r.entropy for r in first.trajectory.records) - self.u0_entropy
        return max(excess * math.sqrt(first.theta), 0.0)


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def _run_one(job) -> RunResult:
    label, theta, cfg, u0_values, sample_every = job
    u0 = GridField(cfg.basis, u0_values)
    log.info("run %s: N=%d mobility=%s", label, cfg.basis.n_modes, cfg.mobility)
    return RunResult(label, theta, cfg.basis.n_modes, integrate(u0, cfg, sample_every))


def _run_all(jobs) -> list[RunResult]:
    workers = min(_worker_count(), len(jobs))
    if workers <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))


def field_distance(a: SpectralField, b: SpectralField) -> float:
    """L^2 distance, after embedding both into the larger basis."""
    big = a.basis if a.basis.n_modes >= b.basis.n_modes else b.basis
    return l2_norm(change_basis(a, big) - change_basis(b, big))


def trajectory_gap(a: Trajectory, b: Trajectory) -> float:
    """Max over shared sample times of the L^2 distance (proxy for the C([0,T];L^2) norm)."""
    tb = {round(s.t, 12): s for s in b.states}
    dists = [field_distance(s.c, tb[round(s.t, 12)].c) for s in a.states if round(s.t, 12) in tb]
    if not dists:
        raise ValueError("trajectories share no sample times")
    return max(dists)


def _u0_summary(report: SweepReport, u0: GridField):
    report.u0_l2 = math.sqrt(quadrature(u0.values**2, u0.basis))
    report.u0_min = float(u0.values.min())
    report.u0_entropy = quadrature(phi(u0.values), u0.basis) if report.u0_min > 0 else None


def theta_sweep(plan: SweepPlan) -> SweepReport:
    """Run the cutoff mobility for every theta in the plan at fixed truncation.

    All runs share the base time step, so differences between them reflect
    theta only.  When ``include_degenerate`` is set the degenerate mobility is
    run as well and its distance to the finest-theta run is recorded.
    """
    base = plan.base
    u0 = plan.initial_field(base.basis)
    jobs = [
        (f"theta={t:g}", t, base.with_mobility(MobilitySpec("cutoff", t)), u0.values, plan.sample_every)
        for t in plan.theta_list
    ]
    if plan.include_degenerate:
        jobs.append(("degenerate", None, base.with_mobility(MobilitySpec("degenerate", None)), u0.values, plan.sample_every))
    report = SweepReport("theta", _run_all(jobs), eps_neg=plan.eps_neg)
    _u0_summary(report, u0)
    thetas = report.theta_runs
    for a, b in zip(thetas, thetas[1:]):
        if a.complete and b.complete:
            report.gaps.append((a.label, b.label, trajectory_gap(a.trajectory, b.trajectory)))
    if plan.include_degenerate:
        deg = report.run("degenerate")
        if deg.complete and thetas[-1].complete:
            report.degenerate_gap = trajectory_gap(thetas[-1].trajectory, deg.trajectory)
    return report


def n_refinement(plan: SweepPlan) -> SweepReport:
    """Run the base configuration at every truncation in ``n_list``.

    Coarser fields are zero-padded into the finer basis before comparing.
    """
    base = plan.base
    theta = base.mobility.theta
    jobs = []
    u0 = None
    for N in plan.n_list:
        basis = base.basis.with_modes(N)
        u0 = plan.initial_field(basis)
        jobs.append((f"N={N}", theta, replace(base, basis=basis), u0.values, plan.sample_every))
    report = SweepReport("refine", _run_all(jobs), eps_neg=plan.eps_neg)
    _u0_summary(report, u0)
    for a, b in zip(report.runs, report.runs[1:]):
        if a.complete and b.complete:
            report.gaps.append((a.label, b.label, trajectory_gap(a.trajectory, b.trajectory)))
    return report


@dataclass
class Verdict:
    holds: bool
    clauses: dict[str, tuple[bool, str]]

    def failures(self) -> list[str]:
        return [f"{name}: {detail}" for name, (ok, detail) in self.clauses.items() if not ok]

    def format(self) -> str:
        lines = [f"verdict: {'PASS' if self.holds else 'FAIL'}"]
        for name, (ok, detail) in self.clauses.items():
            lines.append(f"  [{'ok' if ok else 'FAIL'}] {name}: {detail}")
        return "\n".join(lines)


def final_l2(run: RunResult) -> float:
    return l2_norm(run.trajectory.final.c)


def nonnegativity_report(report: SweepReport, eps_neg: float | None = None) -> Verdict:
    """Check the nonnegativity conclusions on a completed theta sweep.

    Clauses: (a) every run's max-over-samples negativity is within
    ``C_fit * (theta^2 + theta + theta^(1/2))``, with ``C_fit`` calibrated on the
    largest theta; (b) the finest-theta field never dips below ``-eps_neg``;
    (c) the finest-theta field at the final time keeps at least half the
    initial L^2 norm.
    """
    if not report.u0_min > 0:
        raise PreconditionError(f"initial data must be strictly positive (min u0 = {report.u0_min:g})")
    eps = report.eps_neg if eps_neg is None else eps_neg
    clauses: dict[str, tuple[bool, str]] = {}
    runs = report.theta_runs
    if not runs or not report.complete:
        broken = [r.label for r in report.runs if not r.complete]
        clauses["complete"] = (False, f"incomplete runs: {broken}")
        return Verdict(False, clauses)

    c_fit = report.fitted_constant()
    worst = [(t, ratio) for t, _, ratio in report.negativity_table() if ratio > c_fit]
    clauses["negativity_bound"] = (
        not worst,
        f"C_fit={c_fit:.6g}" + (f"; exceeded at theta={[t for t, _ in worst]}" if worst else ""),
    )
    finest = runs[-1]
    m = finest.min_u()
    clauses["nonnegative"] = (m >= -eps, f"min u over samples at theta={finest.theta:g} is {m:.6g} (tolerance {eps:g})")
    norm_t = final_l2(finest)
    clauses["not_identically_zero"] = (
        norm_t >= 0.5 * report.u0_l2,
        f"||u(T)||={norm_t:.6g} vs 0.5*||u0||={0.5 * report.u0_l2:.6g}",
    )
    return Verdict(all(ok for ok, _ in clauses.values()), clauses)


def trajectory_checks(
    records, mass_rtol: float = 1e-10, energy_tol: float = 1e-8, budget_tol: float = 1e-6
) -> dict[str, tuple[bool, str]]:
    """Conservation and dissipation checks along one trajectory's samples."""
    m0 = records[0].mass
    dm = max(abs(r.mass - m0) for r in records)
    rise = max((b.energy - a.energy for a, b in zip(records, records[1:])), default=0.0)
    excess = max(r.budget - records[0].energy for r in records)
    return {
        "mass": (dm <= mass_rtol * abs(m0) + 1e-12, f"max |mass - mass(0)| = {dm:.3e}"),
        "energy_monotone": (rise <= energy_tol, f"largest energy increase between samples {rise:.3e}"),
        "energy_inequality": (excess <= budget_tol, f"max E+visc+mob-E(0) = {excess:.3e}"),
    }


def gaps_decreasing(gaps: list[float], factor: float = 1.0) -> bool:
    """True when every gap is below the previous one divided by ``factor``."""
    return all(b < a / factor for a, b in zip(gaps, gaps[1:]))


def sweep_verdict(report: SweepReport) -> Verdict:
    """Nonnegativity verdict plus the inequality suite on every run.

    Gap monotonicity is reported, not required: convergence in theta is only
    guaranteed along a subsequence.
    """
    verdict = nonnegativity_report(report)
    clauses = dict(verdict.clauses)
    for run in report.runs:
        for name, result in trajectory_checks(run.trajectory.records).items():
            clauses[f"{run.label}:{name}"] = result
    verdict = Verdict(all(ok for ok, _ in clauses.values()), clauses)
    return verdict


def refinement_verdict(report: SweepReport, factor: float = 2.0) -> Verdict:
    clauses: dict[str, tuple[bool, str]] = {}
    if not report.complete:
        clauses["complete"] = (False, f"incomplete runs: {[r.label for r in report.runs if not r.complete]}")
        return Verdict(False, clauses)
    gaps = report.gap_values()
    clauses["gaps_decrease"] = (
        gaps_decreasing(gaps, factor),
        ", ".join(f"{a}->{b}: {g:.3e}" for a, b, g in report.gaps) + f" (required factor {factor:g})",
    )
    for run in report.runs:
        for name, result in trajectory_checks(run.trajectory.records).items():
            clauses[f"{run.label}:{name}"] = result
    return Verdict(all(ok for ok, _ in clauses.values()), clauses)


def describe_gaps(report: SweepReport) -> str:
    lines = [f"{a} vs {b}: C([0,T];L2) gap {g:.6e}" for a, b, g in report.gaps]
    if report.gaps:
        lines.append(f"gaps strictly decreasing: {gaps_decreasing(report.gap_values())}")
    if report.degenerate_gap is not None:
        lines.append(f"finest theta vs degenerate mobility: {report.degenerate_gap:.6e} (reported only)")
    return "\n".join(lines)
