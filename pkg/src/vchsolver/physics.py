"""Double-well potential, mobilities and entropy densities.

All evaluations accept scalars or numpy arrays and are vectorized.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Function evaluated outside its domain of definition."""


@dataclass(frozen=True)
class QuarticWell:
    """``W(u) = gamma * (u - u_minus)^2 * (u - u_plus)^2``."""

    gamma: float = 1.0
    u_minus: float = -1.0
    u_plus: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.u_minus < self.u_plus:
            raise ValueError(f"need u_minus < u_plus, got {self.u_minus}, {self.u_plus}")

    growth_exponent = 3

    def w(self, z):
        a, b = self.u_minus, self.u_plus
        return self.gamma * (z - a) ** 2 * (z - b) ** 2

    def w_prime(self, z):
        a, b = self.u_minus, self.u_plus
        return 2.0 * self.gamma * (z - a) * (z - b) * (2.0 * z - a - b)

    def w_double_prime(self, z):
        a, b = self.u_minus, self.u_plus
        return 2.0 * self.gamma * ((2.0 * z - a - b) ** 2 + 2.0 * (z - a) * (z - b))


@dataclass(frozen=True)
class ZeroPotential:
    """``W = 0``; turns the dynamics linear for manufactured-solution tests."""

    def w(self, z):
        return np.zeros_like(np.asarray(z, dtype=float))

    w_prime = w
    w_double_prime = w


def w_eval(w, z):
    return w.w(z)


def w_prime(w, z):
    return w.w_prime(z)


def w_double_prime(w, z):
    return w.w_double_prime(z)


MOBILITY_KINDS = ("cutoff", "degenerate", "constant")


@dataclass(frozen=True)
class MobilitySpec:
    """Mobility as a function of the phase variable.

    ``cutoff`` is ``max(u, theta)``, ``degenerate`` is ``max(u, 0)``.
    ``constant`` (``M = theta`` everywhere) exists only to make the Galerkin
    system linear in tests.
    """

    kind: str = "cutoff"
    theta: float | None = 0.1

    def __post_init__(self):
        if self.kind not in MOBILITY_KINDS:
            raise ValueError(f"unknown mobility kind {self.kind!r}")
        if self.kind == "degenerate":
            if self.theta is not None:
                object.__setattr__(self, "theta", None)
            return
        if self.theta is None or not 0.0 < self.theta < 1.0:
            raise ValueError(f"{self.kind} mobility needs 0<theta<1, got theta={self.theta}")

    @property
    def floor(self) -> float:
        """Lower bound of the mobility; 0 when degenerate."""
        return 0.0 if self.theta is None else self.theta

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "cutoff":
            return np.where(z > self.theta, z, self.theta)
        if self.kind == "degenerate":
            return np.where(z > 0.0, z, 0.0)
        return np.full_like(z, self.theta)


def mobility_eval(m: MobilitySpec, z):
    return m(z)


# -- entropy ----------------------------------------------------------------


def phi(z):
    """``Phi(u) = u ln u - u + 1``, defined for ``u > 0``."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise DomainError("Phi is defined only for u > 0")
    return z * np.log(z) - z + 1.0


def phi_theta(theta: float, z):
    """C^2 entropy with ``Phi_theta'' = 1/M_theta``; quadratic for ``u < theta``."""
    z = np.asarray(z, dtype=float)
    # both branches agree at theta; the log form keeps Phi_theta == Phi there exactly
    upper = z >= theta
    safe = np.where(upper, z, 1.0)
    hi = safe * np.log(safe) - safe + 1.0
    lo = z * z / (2.0 * theta) + (np.log(theta) - 1.0) * z + 1.0 - theta / 2.0
    return np.where(upper, hi, lo)


def phi_theta_prime(theta: float, z):
    z = np.asarray(z, dtype=float)
    upper = z > theta
    return np.where(upper, np.log(np.where(upper, z, 1.0)), z / theta + np.log(theta) - 1.0)


def phi_theta_second(theta: float, z):
    z = np.asarray(z, dtype=float)
    return 1.0 / np.where(z > theta, z, theta)


@dataclass(frozen=True)
class EntropySpec:
    """Entropy density; ``theta=None`` selects the unregularized ``Phi``."""

    theta: float | None = None

    def __post_init__(self):
        if self.theta is not None and not 0.0 < self.theta < 1.0:
            raise ValueError(f"entropy cutoff needs 0<theta<1, got {self.theta}")

    def __call__(self, z):
        if self.theta is None:
            return phi(z)
        return phi_theta(self.theta, z)


def entropy_eval(e: EntropySpec, z):
    return e(z)


# -- growth constants -------------------------------------------------------


@dataclass(frozen=True)
class GrowthConstants:
    """Constants ``C1..C10`` of the polynomial growth sandwich, exponent ``r``."""

    r: int
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    C6: float
    C7: float
    C8: float
    C9: float
    C10: float


def growth_constants(w: QuarticWell) -> GrowthConstants:
    """Explicit, positive constants valid for all real ``z``.

    Writing ``W = g*(z^2 - s z + p)^2`` with ``s = a + b`` and ``p = a b``:

    * ``z^2 - s z + p >= z^2/2 - K`` with ``K = (a^2 + b^2)/2``, and
      ``(y - K)^2 >= y^2/2 - K^2`` give ``W >= g z^4/8 - g K^2``;
    * ``(x+y+v)^2 <= 3(x^2+y^2+v^2)`` and ``s^2 z^2 <= (z^4 + s^4)/2`` give the
      upper bound;
    * ``|z - a|, |z - b|, |z - s/2| <= |z| + A`` with ``A = max(|a|, |b|)`` and
      ``(t + A)^3 <= 4 (t^3 + A^3)`` bound ``W'``;
    * ``W'' = 2g (6 z^2 - 6 s z + s^2 + 2p)`` with ``|6 s z| <= 3 z^2 + 3 s^2``
      (dropped when ``s = 0``) bounds ``W''``.
    """
    g, a, b = w.gamma, w.u_minus, w.u_plus
    s, p = a + b, a * b
    K = 0.5 * (a * a + b * b)
    A = max(abs(a), abs(b))
    if s == 0.0:
        c7, c8 = 12.0 * g, 2.0 * g * max(-2.0 * p, 0.0)
        c9, c10 = 12.0 * g, 2.0 * g * 2.0 * abs(p)
    else:
        c7, c8 = 6.0 * g, 2.0 * g * (2.0 * s * s - 2.0 * p)
        c9, c10 = 18.0 * g, 2.0 * g * (4.0 * s * s + 2.0 * abs(p))
    return GrowthConstants(
        r=3,
        C1=g / 8.0,
        C2=g * K * K,
        C3=4.5 * g,
        C4=3.0 * g * (0.5 * s**4 + p * p),
        C5=16.0 * g,
        C6=16.0 * g * A**3,
        C7=c7,
        C8=max(c8, np.finfo(float).tiny),
        C9=c9,
        C10=max(c10, np.finfo(float).tiny),
    )
