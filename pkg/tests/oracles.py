"""Reference computations that avoid the FFT code paths under test."""
import itertools

import numpy as np


def full_modes(basis):
    """Every wavenumber of the basis in the full (not half) spectrum."""
    h = basis.n_modes // 2
    rng = range(-h + 1, h)
    return [k for k in itertools.product(rng, repeat=basis.n)]


def _half_index(basis, k):
    N = basis.n_modes
    # rfftn layout: every k with k_last >= 0 is stored, both signs on the k_last = 0 plane
    if k[-1] < 0:
        return None
    return tuple(ka % N for ka in k[:-1]) + (k[-1],)


def to_full(coeffs, basis):
    """Half-spectrum array -> dict k -> c_k using conjugate symmetry."""
    N = basis.n_modes
    out = {}
    for k in full_modes(basis):
        idx = _half_index(basis, k)
        if idx is None:
            neg = tuple(-ka for ka in k)
            out[k] = np.conj(coeffs[tuple(ka % N for ka in neg[:-1]) + (neg[-1],)])
        else:
            out[k] = coeffs[idx]
    return out


def basis_function(basis, k):
    x = basis.grid()
    phase = sum(ka * xa for ka, xa in zip(k, x))
    return np.exp(1j * phase) / (2 * np.pi) ** (basis.n / 2)


def evaluate(coeffs, basis):
    """Direct summation of ``sum_k c_k phi_k`` on the grid."""
    full = to_full(coeffs, basis)
    return sum(c * basis_function(basis, k) for k, c in full.items()).real


def dense_stiffness(mobility_values, basis):
    """``A_jk = h^n sum_m M(x_m) grad phi_k(x_m) . conj(grad phi_j(x_m))`` over the full mode list."""
    modes = full_modes(basis)
    phis = np.array([basis_function(basis, k).ravel() for k in modes])
    K = np.array(modes, dtype=float)
    w = mobility_values.ravel() * basis.cell_volume
    A = np.zeros((len(modes), len(modes)), dtype=complex)
    for a in range(basis.n):
        G = 1j * K[:, a : a + 1] * phis  # rows: d/dx_a phi_k on the grid
        A += (G.conj() * w) @ G.T
    return A, modes


def dense_apply(A, modes, coeffs, basis):
    """Apply a dense full-spectrum matrix and return the result on the half spectrum."""
    full = to_full(coeffs, basis)
    vec = np.array([full[k] for k in modes])
    res = A @ vec
    out = np.zeros(basis.spectral_shape, dtype=complex)
    for k, r in zip(modes, res):
        idx = _half_index(basis, k)
        if idx is not None:
            out[idx] = r
    return out


def test_mode_rate(basis, kappa, alpha, theta):
    """Decay rate of each stored mode for constant mobility and zero potential."""
    from vchsolver.spectral import eigenvalues

    lam = eigenvalues(basis)
    return theta * kappa * lam**2 / (1.0 + alpha * theta * lam)


test_mode_rate.__test__ = False
