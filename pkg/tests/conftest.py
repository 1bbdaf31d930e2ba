import numpy as np
import pytest

from vchsolver.galerkin import PhysicsSpec, SolverConfig
from vchsolver.physics import MobilitySpec, QuarticWell, ZeroPotential
from vchsolver.spectral import BasisSpec, SpectralField, enforce_hermitian


def make_config(n=1, N=64, theta=0.1, kind="cutoff", potential=None, kappa=1.0, alpha=1.0, dt=1e-3, t_end=1.0, **kw):
    basis = BasisSpec.create(n, N)
    mobility = MobilitySpec(kind, None if kind == "degenerate" else theta)
    physics = PhysicsSpec(QuarticWell() if potential is None else potential, mobility)
    return SolverConfig(kappa, alpha, physics, basis, dt, t_end, **kw)


def test_mode_config(n=1, N=16, theta=0.1, **kw):
    """Constant mobility and zero potential: the Galerkin system is linear and diagonal."""
    return make_config(n=n, N=N, theta=theta, kind="constant", potential=ZeroPotential(), **kw)


test_mode_config.__test__ = False


def random_field(basis, rng, scale=1.0, decay=1.0):
    shape = basis.spectral_shape
    raw = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    from vchsolver.spectral import eigenvalues

    raw = raw * scale / (1.0 + eigenvalues(basis)) ** decay
    return SpectralField(basis, enforce_hermitian(raw, basis))


def positive_state(basis, rng, mean=1.0, amp=0.3):
    """Random smooth field with ``u > 0`` everywhere on the grid."""
    from vchsolver.spectral import coeffs_to_values

    f = random_field(basis, rng, decay=1.5)
    vals = coeffs_to_values(f.coeffs, basis)
    f = f * (amp / np.abs(vals).max())
    f.coeffs.flat[0] = mean * (2 * np.pi) ** (basis.n / 2)
    return f


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, echoed again in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
