"""Fourier basis on the periodic box (0, 2*pi)^n.

Fields are expanded in the orthonormal exponentials

    phi_k(x) = (2*pi)^(-n/2) * exp(i k.x),   -N/2 < k_a < N/2,

so a coefficient is ``c_k = (2*pi)^(-n/2) * int u exp(-i k.x) dx`` and
``sum_k |c_k|^2 = ||u||_{L^2}^2``.  Storage uses the real-to-complex
half-spectrum layout of :func:`numpy.fft.rfftn`: every axis but the last
holds the full set of wavenumbers in FFT order, the last axis only
``k >= 0``.  The Nyquist index ``-N/2`` is kept in the array but is always
zero, because its conjugate partner ``+N/2`` is outside the mode set.

Nonlinear terms are evaluated on a collocation grid of ``grid_points`` per
axis (padded to at least 3/2 of the mode count by default).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft

TWO_PI = 2.0 * np.pi


def _even_fast_len(target: int) -> int:
    m = scipy.fft.next_fast_len(target, real=True)
    while m % 2:
        m = scipy.fft.next_fast_len(m + 1, real=True)
    return m


@dataclass(frozen=True)
class BasisSpec:
    """Truncated Fourier basis and its collocation grid.

    Parameters
    ----------
    n : int
        Spatial dimension, 1 or 2.
    n_modes : int
        Truncation count per axis (even, at least 4).
    grid_points : int
        Collocation points per axis; must be at least ``n_modes``.
    """

    n: int
    n_modes: int
    grid_points: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"dimension n must be 1 or 2, got {self.n}")
        if self.n_modes < 4 or self.n_modes % 2:
            raise ValueError(f"n_modes must be even and >= 4, got {self.n_modes}")
        if self.grid_points < self.n_modes:
            raise ValueError(
                f"grid_points ({self.grid_points}) must be >= n_modes ({self.n_modes})"
            )

    @classmethod
    def create(cls, n: int, n_modes: int, padding: float = 1.5) -> "BasisSpec":
        """Basis whose grid is ``ceil(padding * n_modes)`` rounded up to an even fast FFT size."""
        if padding < 1.0:
            raise ValueError(f"padding must be >= 1, got {padding}")
        return cls(n, n_modes, _even_fast_len(math.ceil(padding * n_modes)))

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        N = self.n_modes
        return (N,) * (self.n - 1) + (N // 2 + 1,)

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.grid_points,) * self.n

    @property
    def cell_volume(self) -> float:
        return (TWO_PI / self.grid_points) ** self.n

    @property
    def volume(self) -> float:
        return TWO_PI**self.n

    def with_modes(self, n_modes: int) -> "BasisSpec":
        """Same dimension and padding ratio, different truncation."""
        ratio = self.grid_points / self.n_modes
        return BasisSpec.create(self.n, n_modes, padding=ratio)

    def grid(self) -> tuple[np.ndarray, ...]:
        """Collocation coordinates, one array of ``grid_shape`` per axis."""
        x = np.arange(self.grid_points) * (TWO_PI / self.grid_points)
        return tuple(np.meshgrid(*([x] * self.n), indexing="ij"))


# -- cached per-basis tables ------------------------------------------------


@lru_cache(maxsize=64)
def wavenumbers(basis: BasisSpec) -> tuple[np.ndarray, ...]:
    """Integer wavenumber of each half-spectrum entry, one array per axis."""
    N = basis.n_modes
    axes = [np.fft.fftfreq(N, 1.0 / N)] * (basis.n - 1) + [np.arange(N // 2 + 1.0)]
    ks = np.meshgrid(*axes, indexing="ij")
    for k in ks:
        k.setflags(write=False)
    return tuple(ks)


@lru_cache(maxsize=64)
def eigenvalues(basis: BasisSpec) -> np.ndarray:
    """Eigenvalue ``|k|^2`` of ``-Laplacian`` for every stored mode."""
    lam = sum(k * k for k in wavenumbers(basis))
    lam.setflags(write=False)
    return lam


@lru_cache(maxsize=64)
def mode_mask(basis: BasisSpec) -> np.ndarray:
    """True on modes inside the basis (every ``|k_a| < N/2``)."""
    half = basis.n_modes // 2
    mask = np.ones(basis.spectral_shape, dtype=bool)
    for k in wavenumbers(basis):
        mask &= np.abs(k) < half
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=64)
def half_weights(basis: BasisSpec) -> np.ndarray:
    """Multiplicity of each stored entry in the full spectrum (2 for k_last > 0)."""
    w = np.where(wavenumbers(basis)[-1] > 0, 2.0, 1.0)
    w[~mode_mask(basis)] = 0.0
    w.setflags(write=False)
    return w


def resize_spectrum(coeffs: np.ndarray, n: int, N: int, M: int) -> np.ndarray:
    """Move a half-spectrum array from ``N`` to ``M`` stored wavenumbers per axis.

    Modes with every ``|k_a| < min(N, M)/2`` are copied; all other entries of
    the result are zero.  Serves both zero-padding onto a collocation grid and
    truncation back to the basis.
    """
    h = min(N, M) // 2
    out = np.zeros((M,) * (n - 1) + (M // 2 + 1,), dtype=complex)
    last = slice(0, h)
    if n == 1:
        out[last] = coeffs[last]
        return out
    out[:h, last] = coeffs[:h, last]
    if h > 1:
        out[M - h + 1 :, last] = coeffs[N - h + 1 :, last]
    return out


def enforce_hermitian(coeffs: np.ndarray, basis: BasisSpec) -> np.ndarray:
    """Project onto fields that are real: symmetrize the ``k_last = 0`` plane, drop out-of-basis modes."""
    out = np.where(mode_mask(basis), coeffs, 0.0).astype(complex)
    plane = out[..., 0]
    if basis.n == 1:
        out[0] = plane.real
        return out
    axes = tuple(range(basis.n - 1))
    mirrored = np.roll(np.flip(plane, axes), 1, axes)
    out[..., 0] = 0.5 * (plane + mirrored.conj())
    return out


def hermitian_defect(coeffs: np.ndarray, basis: BasisSpec) -> float:
    """Largest violation of ``c(-k) = conj(c(k))`` or of the zero out-of-basis modes."""
    return float(np.abs(enforce_hermitian(coeffs, basis) - coeffs).max())


@dataclass
class SpectralField:
    """Coefficients of a real field in the orthonormal Fourier basis."""

    basis: BasisSpec
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != self.basis.spectral_shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match basis {self.basis.spectral_shape}"
            )

    @classmethod
    def zeros(cls, basis: BasisSpec) -> "SpectralField":
        return cls(basis, np.zeros(basis.spectral_shape, dtype=complex))

    @classmethod
    def mode(cls, basis: BasisSpec, k: tuple[int, ...], value: complex = 1.0) -> "SpectralField":
        """Field ``value*phi_k + conj(value)*phi_{-k}`` (just ``value*phi_0`` for k = 0)."""
        if len(k) != basis.n:
            raise ValueError(f"mode index {k} has wrong length for n={basis.n}")
        if any(abs(ka) >= basis.n_modes // 2 for ka in k):
            raise ValueError(f"mode {k} outside basis with n_modes={basis.n_modes}")
        if k[-1] < 0 or (k[-1] == 0 and basis.n == 2 and k[0] < 0):
            k = tuple(-ka for ka in k)
            value = np.conj(value)
        c = np.zeros(basis.spectral_shape, dtype=complex)
        N = basis.n_modes
        idx = tuple(ka % N for ka in k[:-1]) + (k[-1],)
        if all(ka == 0 for ka in k):
            c[idx] = np.real(value)
        else:
            c[idx] = value
            if k[-1] == 0:
                c[tuple(-ka % N for ka in k[:-1]) + (0,)] = np.conj(value)
        return cls(basis, c)

    def copy(self) -> "SpectralField":
        return SpectralField(self.basis, self.coeffs.copy())

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.basis, self.coeffs * scalar)

    __rmul__ = __mul__

    def constant_mode(self) -> float:
        return float(self.coeffs.flat[0].real)


@dataclass
class GridField:
    """Real values on the collocation grid."""

    basis: BasisSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.basis.grid_shape:
            raise ValueError(
                f"grid shape {self.values.shape} does not match basis {self.basis.grid_shape}"
            )

    @classmethod
    def from_function(cls, basis: BasisSpec, fn) -> "GridField":
        """Sample ``fn(*coords)`` on the collocation grid."""
        values = np.broadcast_to(fn(*basis.grid()), basis.grid_shape)
        return cls(basis, np.array(values, dtype=float))


# -- transforms on raw arrays (used by the solver hot loop) -----------------


def coeffs_to_values(coeffs: np.ndarray, basis: BasisSpec) -> np.ndarray:
    M, n = basis.grid_points, basis.n
    padded = resize_spectrum(coeffs, n, basis.n_modes, M)
    scale = M**n / TWO_PI ** (n / 2)
    return scipy.fft.irfftn(padded, s=basis.grid_shape) * scale


def values_to_coeffs(values: np.ndarray, basis: BasisSpec) -> np.ndarray:
    M, n = basis.grid_points, basis.n
    scale = TWO_PI ** (n / 2) / M**n
    full = scipy.fft.rfftn(values) * scale
    out = resize_spectrum(full, n, M, basis.n_modes)
    if n == 1:
        out[0] = out[0].real
        return out
    return enforce_hermitian(out, basis)


# -- public operations ------------------------------------------------------


def to_grid(f: SpectralField) -> GridField:
    """Evaluate ``sum_k c_k phi_k`` at the collocation points."""
    return GridField(f.basis, coeffs_to_values(f.coeffs, f.basis))


def to_spectral(g: GridField) -> SpectralField:
    """Quadrature coefficients ``int g conj(phi_k) dx`` truncated to the basis."""
    return SpectralField(g.basis, values_to_coeffs(g.values, g.basis))


def project_initial(u0: GridField, basis: BasisSpec) -> SpectralField:
    """Galerkin projection of initial data onto the first ``n_modes`` modes."""
    if u0.values.shape != basis.grid_shape:
        raise ValueError("initial data must be sampled on the basis collocation grid")
    return to_spectral(GridField(basis, u0.values))


def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.basis, -eigenvalues(f.basis) * f.coeffs)


def gradient(f: SpectralField) -> tuple[SpectralField, ...]:
    return tuple(SpectralField(f.basis, 1j * k * f.coeffs) for k in wavenumbers(f.basis))


def divergence(v: tuple[SpectralField, ...]) -> SpectralField:
    basis = v[0].basis
    if len(v) != basis.n:
        raise ValueError(f"expected {basis.n} components, got {len(v)}")
    return SpectralField(basis, sum(1j * k * comp.coeffs for k, comp in zip(wavenumbers(basis), v)))


def dealias_mask(basis: BasisSpec) -> np.ndarray:
    """Modes that survive the 3/2 rule for the basis grid.

    Products of two fields are alias-free on modes with ``|k_a| < grid_points/3``;
    with the default 3/2 padding that is the whole basis except Nyquist.
    """
    cutoff = min(basis.n_modes / 2, basis.grid_points / 3)
    keep = mode_mask(basis).copy()
    for k in wavenumbers(basis):
        keep &= np.abs(k) < cutoff
    return keep


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.basis, np.where(dealias_mask(f.basis), f.coeffs, 0.0))


def truncate(f: SpectralField) -> SpectralField:
    """Drop entries outside the mode set (Nyquist)."""
    return SpectralField(f.basis, np.where(mode_mask(f.basis), f.coeffs, 0.0))


def inner(a: np.ndarray, b: np.ndarray, basis: BasisSpec) -> float:
    """Real L^2 inner product of two real fields given by half-spectrum arrays."""
    return float(np.sum(half_weights(basis) * (a.conj() * b).real))


def l2_norm(f: SpectralField) -> float:
    return math.sqrt(inner(f.coeffs, f.coeffs, f.basis))


def change_basis(f: SpectralField, basis: BasisSpec) -> SpectralField:
    """Re-express ``f`` in another truncation (zero-pad or truncate)."""
    if basis.n != f.basis.n:
        raise ValueError("cannot change spatial dimension")
    return SpectralField(basis, resize_spectrum(f.coeffs, f.basis.n, f.basis.n_modes, basis.n_modes))


def quadrature(values: np.ndarray, basis: BasisSpec) -> float:
    """Rectangle-rule integral over the box (spectrally accurate for periodic data)."""
    return float(values.sum() * basis.cell_volume)
