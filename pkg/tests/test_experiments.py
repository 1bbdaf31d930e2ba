"""Cutoff sweep, truncation refinement and their verdicts, on small fast configurations."""
import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import make_config, test_mode_config
from vchsolver.diagnostics import DiagnosticsRecord
from vchsolver.experiments import (
    THREADS_ENV,
    PreconditionError,
    SweepPlan,
    SweepReport,
    Verdict,
    describe_gaps,
    field_distance,
    gaps_decreasing,
    n_refinement,
    negativity_scale,
    nonnegativity_report,
    refinement_verdict,
    sweep_verdict,
    theta_sweep,
    trajectory_checks,
    trajectory_gap,
)
from vchsolver.galerkin import SolverState, Trajectory
from vchsolver.spectral import BasisSpec, SpectralField, change_basis, to_grid
from vchsolver.storage import write_snapshot

SHORT = dict(N=16, dt=1e-2, t_end=0.1)


def plan(u0="1 + 0.5*sin(x)", thetas=(0.1, 0.05, 0.025), **kw):
    cfg = kw.pop("cfg", None) or make_config(**SHORT)
    return SweepPlan(cfg, u0, theta_list=thetas, sample_every=kw.pop("sample_every", 2), **kw)


def test_negativity_scale():
    assert negativity_scale(0.25) == pytest.approx(0.0625 + 0.25 + 0.5)


class TestPlan:
    @pytest.mark.parametrize("thetas", [(0.1, 0.1), (0.05, 0.1), (0.1, 1.5), (0.0,)])
    def test_theta_list_validated(self, thetas):
        with pytest.raises(ValueError):
            plan(thetas=thetas)

    def test_n_list_validated(self):
        with pytest.raises(ValueError):
            plan(n_list=(32, 16))

    def test_callable_initial_data(self):
        p = plan(u0=lambda x: 2 + np.cos(x))
        b = BasisSpec.create(1, 16)
        np.testing.assert_allclose(p.initial_field(b).values, 2 + np.cos(b.grid()[0]))

    def test_snapshot_initial_data(self, tmp_path):
        big = BasisSpec.create(1, 32)
        f = SpectralField.mode(big, (0,), 3.0) + SpectralField.mode(big, (2,), 0.5) + SpectralField.mode(big, (12,), 0.1)
        path = tmp_path / "u0.vchf"
        write_snapshot(f, 0.0, path)
        small = BasisSpec.create(1, 16)
        got = plan(u0=path).initial_field(small)
        np.testing.assert_allclose(got.values, to_grid(change_basis(f, small)).values, atol=1e-14)


class TestThetaSweep:
    def test_single_theta_has_no_gaps(self):
        report = theta_sweep(plan(thetas=(0.1,), include_degenerate=False))
        assert report.gaps == [] and len(report.runs) == 1

    def test_pure_phase(self):
        report = theta_sweep(plan(u0="1"))
        assert report.complete
        assert report.gap_values() == [0.0, 0.0]
        assert report.degenerate_gap == 0.0
        for theta, neg, _ in report.negativity_table():
            assert neg == pytest.approx(theta**2 * 2 * np.pi, rel=1e-14)
        assert nonnegativity_report(report).holds
        assert sweep_verdict(report).holds

    def test_smooth_positive_data(self):
        report = theta_sweep(plan())
        assert report.complete
        negs = [m for _, m, _ in report.negativity_table()]
        assert all(b < a for a, b in zip(negs, negs[1:]))
        assert report.u0_min == pytest.approx(0.5, abs=1e-3)
        assert report.u0_l2 == pytest.approx(math.sqrt(2 * np.pi + 0.25 * np.pi), rel=1e-12)
        assert report.entropy_constant() >= 0
        assert sweep_verdict(report).holds
        assert "vs" in describe_gaps(report)

    def test_cutoff_active_gives_nonzero_gaps(self):
        # mean inside the spinodal region: the field dips below every cutoff
        cfg = make_config(N=16, dt=1e-2, t_end=0.2, kappa=0.05)
        report = theta_sweep(plan("0.15 + 0.3*sin(x)", thetas=(0.2, 0.1), cfg=cfg, include_degenerate=False))
        assert report.complete
        assert report.gap_values()[0] > 0

    def test_nonpositive_initial_data_rejected(self):
        report = theta_sweep(plan("0.3*sin(x)", thetas=(0.1,), include_degenerate=False))
        with pytest.raises(PreconditionError):
            nonnegativity_report(report)
        with pytest.raises(PreconditionError):
            report.entropy_constant()

    def test_runs_are_deterministic_across_thread_counts(self, monkeypatch):
        p = plan(thetas=(0.1, 0.05), include_degenerate=False)
        monkeypatch.setenv(THREADS_ENV, "1")
        serial = theta_sweep(p)
        monkeypatch.setenv(THREADS_ENV, "2")
        parallel = theta_sweep(p)
        for a, b in zip(serial.runs, parallel.runs):
            assert a.trajectory.records == b.trajectory.records

    def test_bad_thread_count(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "zero")
        with pytest.raises(ValueError):
            theta_sweep(plan(thetas=(0.1,), include_degenerate=False))


class TestRefinement:
    def test_smooth_data_gaps_shrink(self):
        cfg = make_config(**SHORT)
        report = n_refinement(plan(cfg=cfg, n_list=(8, 16, 32)))
        gaps = report.gap_values()
        assert gaps[1] < gaps[0] / 2
        assert refinement_verdict(report).holds

    def test_band_limited_linear_dynamics(self):
        cfg = test_mode_config(N=16, dt=1e-2, t_end=0.1)
        report = n_refinement(plan("1 + 0.5*sin(x) + 0.2*cos(3*x) - 0.1*sin(7*x)", cfg=cfg, n_list=(16, 32)))
        assert report.gap_values()[0] < 1e-10

    def test_identical_truncations(self):
        report = n_refinement(plan(n_list=(16, 16)))
        assert report.gap_values() == [0.0]

    def test_incomplete_report_fails(self):
        cfg = make_config(N=16, dt=1e-2, t_end=0.1, picard_max=1, max_halvings=0)
        report = n_refinement(plan("0.2 + 0.6*sin(x)", cfg=cfg, n_list=(16, 32)))
        assert not report.complete
        v = refinement_verdict(report)
        assert not v.holds and "complete" in v.clauses


def _traj(times, values, N=8):
    b = BasisSpec.create(1, N)
    states = [SolverState(t, SpectralField.mode(b, (0,), v)) for t, v in zip(times, values)]
    return Trajectory(None, states, [])


class TestGaps:
    def test_field_distance_pads_coarser(self):
        a = SpectralField.mode(BasisSpec.create(1, 8), (1,), 1.0)
        b = SpectralField.mode(BasisSpec.create(1, 16), (1,), 1.0) + SpectralField.mode(BasisSpec.create(1, 16), (6,), 0.5)
        assert field_distance(a, b) == pytest.approx(math.sqrt(2 * 0.25), rel=1e-15)
        assert field_distance(b, a) == field_distance(a, b)

    def test_trajectory_gap_is_max_over_shared_times(self):
        a = _traj([0.0, 0.5, 1.0], [1.0, 2.0, 3.0])
        b = _traj([0.0, 1.0], [1.0, 3.5])
        assert trajectory_gap(a, b) == 0.5
        with pytest.raises(ValueError):
            trajectory_gap(a, _traj([0.25], [0.0]))

    def test_gaps_decreasing(self):
        assert gaps_decreasing([1.0, 0.4, 0.1], factor=2)
        assert not gaps_decreasing([1.0, 0.6], factor=2)
        assert not gaps_decreasing([0.0, 0.0])
        assert gaps_decreasing([0.3])


def _r(t, mass=1.0, energy=1.0, visc=0.0, mob=0.0):
    return DiagnosticsRecord(t, mass, energy, 0.0, 0.0, visc, mob, 0.0, 0.0)


class TestChecks:
    def test_clean_records(self):
        checks = trajectory_checks([_r(0), _r(1, energy=0.9, mob=0.05)])
        assert all(ok for ok, _ in checks.values())

    def test_each_failure_detected(self):
        checks = trajectory_checks([_r(0), _r(1, mass=1.001, energy=1.1), _r(2, energy=1.0, visc=0.5)])
        assert not checks["mass"][0]
        assert not checks["energy_monotone"][0]
        assert not checks["energy_inequality"][0]

    def test_verdict_format(self):
        v = Verdict(False, {"a": (True, "fine"), "b": (False, "broken at t=1")})
        assert v.failures() == ["b: broken at t=1"]
        text = v.format()
        assert text.splitlines()[0] == "verdict: FAIL"
        assert "[FAIL] b: broken at t=1" in text

    def test_negativity_clause_breaks(self):
        report = theta_sweep(plan(u0="1", thetas=(0.1, 0.05), include_degenerate=False))
        recs = report.runs[-1].trajectory.records
        recs[-1] = replace(recs[-1], min_u=-0.5)
        v = nonnegativity_report(report, eps_neg=1e-3)
        assert not v.holds
        assert any(f.startswith("nonnegative") for f in v.failures())

    def test_empty_report(self):
        r = SweepReport("theta", [], u0_min=1.0)
        assert not nonnegativity_report(r).holds
