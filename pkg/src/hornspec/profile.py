"""Geometry and index bookkeeping for warped-product horn metrics.

A horn of exponent kappa > 1 and length l over a closed section is the interval
(0, l] carrying the metric dx^2 + h(x)^2 g_section with warp factor

    h(x) = x^kappa * H(x),      H(0) = 1,  H > 0 on [0, l],

where H is a polynomial.  This module holds the profile data, the half-integer
degree weights alpha_q = q + (1 - m)/2 attached to form degree q on an
m-dimensional section, the derived constants c_alpha = kappa (alpha - 1/2) + 1/2,
and the warped integrals (volumes of weighted profiles) that enter the torsion
formulas.  Everything here is exact bookkeeping plus one-dimensional quadrature;
no spectral theory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import quad


class DivergentIntegral(ArithmeticError):
    """Raised when a warped integral int_0^l h(x)^e dx diverges at x = 0."""


class Perversity(Enum):
    """The two middle perversities used for even-dimensional sections."""

    LOWER_MIDDLE = "lower-middle"
    UPPER_MIDDLE = "upper-middle"

    @property
    def complement(self) -> "Perversity":
        if self is Perversity.LOWER_MIDDLE:
            return Perversity.UPPER_MIDDLE
        return Perversity.LOWER_MIDDLE


class SideCondition(Enum):
    """Boundary condition at the regular end x = l (angle beta)."""

    ABSOLUTE = "absolute"   # beta = pi/2 : derivative-type condition
    RELATIVE = "relative"   # beta = 0    : value-type condition

    @property
    def angle(self) -> float:
        return math.pi / 2 if self is SideCondition.ABSOLUTE else 0.0

    @property
    def complement(self) -> "SideCondition":
        if self is SideCondition.ABSOLUTE:
            return SideCondition.RELATIVE
        return SideCondition.ABSOLUTE


class TipCondition(Enum):
    """Boundary condition at the singular end x = 0 (angle delta).

    Only meaningful when the singular end is regular or limit circle; in the
    limit-point cases there is a unique self-adjoint extension and no choice.
    """

    PLUS = "plus"    # delta = 0     : select the recessive / vanishing solution
    MINUS = "minus"  # delta = pi/2  : select the complementary solution

    @property
    def angle(self) -> float:
        return 0.0 if self is TipCondition.PLUS else math.pi / 2


@dataclass(frozen=True)
class BoundaryFlavor:
    """Pair of boundary choices: mandatory at x = l, optional at x = 0."""

    at_l: SideCondition
    at_0: TipCondition | None = None


def two_alpha(m: int, q: int) -> int:
    """Integer 2*alpha_q for form degree q over an m-dimensional section."""
    return 2 * q + 1 - m


def alpha(m: int, q: int) -> float:
    """Degree weight alpha_q = q + (1 - m)/2; always an exact half-integer."""
    return two_alpha(m, q) / 2.0


def c_of_alpha(kappa: float, two_alpha_val: int) -> float:
    """Indicial constant c_alpha = kappa (alpha - 1/2) + 1/2 for 2*alpha given."""
    return kappa * (two_alpha_val - 1) / 2.0 + 0.5


@dataclass(frozen=True)
class DegreeContext:
    """Form degree q over an m-dimensional section, with its exact weight."""

    m: int
    q: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("section dimension m must be >= 1")

    @property
    def two_alpha_q(self) -> int:
        return two_alpha(self.m, self.q)

    @property
    def alpha_q(self) -> float:
        return alpha(self.m, self.q)

    @property
    def dual(self) -> "DegreeContext":
        """Poincare partner degree m - 1 - q (alpha flips sign)."""
        return DegreeContext(self.m, self.m - 1 - self.q)


@dataclass(frozen=True)
class HornProfile:
    """Warp factor h(x) = x^kappa * H(x) on (0, length]."""

    kappa: float
    length: float
    H_coeffs: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if not self.kappa > 1.0:
            raise ValueError("horn exponent kappa must be > 1")
        if not self.length > 0.0:
            raise ValueError("horn length must be > 0")
        coeffs = tuple(float(c) for c in self.H_coeffs)
        object.__setattr__(self, "H_coeffs", coeffs)
        if coeffs[0] != 1.0:
            raise ValueError("H(0) must equal 1")
        xs = np.linspace(0.0, self.length, 512)
        if np.any(np.polynomial.polynomial.polyval(xs, coeffs) <= 0.0):
            raise ValueError("H must be positive on [0, length]")

    # -- polynomial pieces ---------------------------------------------------

    def H(self, x):
        return np.polynomial.polynomial.polyval(x, self.H_coeffs)

    def H1(self, x):
        return np.polynomial.polynomial.polyval(
            x, np.polynomial.polynomial.polyder(self.H_coeffs))

    def H2(self, x):
        return np.polynomial.polynomial.polyval(
            x, np.polynomial.polynomial.polyder(self.H_coeffs, 2))

    # -- warp factor and derivatives ------------------------------------------

    def h_eval(self, x):
        """Return (h, h', h'') at x (scalar or array), for x > 0."""
        x = np.asarray(x, dtype=float)
        k = self.kappa
        H, H1, H2 = self.H(x), self.H1(x), self.H2(x)
        xk = x ** k
        h = xk * H
        h1 = xk * (k * H / x + H1)
        h2 = xk * (k * (k - 1) * H / x ** 2 + 2 * k * H1 / x + H2)
        return h, h1, h2

    def log_h(self, x):
        x = np.asarray(x, dtype=float)
        return self.kappa * np.log(x) + np.log(self.H(x))

    def h_ratios(self, x):
        """Return (h'/h, h''/h) at x; cheaper and better conditioned than h_eval."""
        x = np.asarray(x, dtype=float)
        k = self.kappa
        H, H1, H2 = self.H(x), self.H1(x), self.H2(x)
        g = H1 / H
        r1 = k / x + g
        r2 = k * (k - 1) / x ** 2 + 2 * k * g / x + H2 / H
        return r1, r2


def warped_integral(profile: HornProfile, exponent: float,
                    upper: float | None = None, lower: float = 0.0,
                    tol: float = 1e-12) -> float:
    """Compute int_lower^upper h(x)^exponent dx with the x = t^(1/(1+kappa e))
    substitution regularizing the x = 0 endpoint.

    Raises DivergentIntegral when kappa * exponent <= -1 and lower == 0.
    """
    if upper is None:
        upper = profile.length
    ke = profile.kappa * exponent
    if lower > 0.0 or ke >= 0.0:
        if lower == 0.0 and ke < 0.0:  # pragma: no cover - guarded above
            pass
        val, _ = quad(lambda x: profile.H(x) ** exponent * x ** ke,
                      lower, upper, epsabs=tol, epsrel=tol, limit=400)
        return val
    if ke <= -1.0:
        raise DivergentIntegral(
            f"int h^{exponent} dx diverges at 0 (kappa*exponent = {ke})")
    # 0 > ke > -1: substitute x = t^(1/(1+ke)); the integrand becomes
    # H(x(t))^exponent / (1+ke), perfectly regular on [0, upper^(1+ke)].
    p = 1.0 + ke
    val, _ = quad(lambda t: profile.H(t ** (1.0 / p)) ** exponent / p,
                  0.0, upper ** p, epsabs=tol, epsrel=tol, limit=400)
    return val


def gamma_q(profile: HornProfile, m: int, q: int) -> float:
    """Warped volume gamma_q = int_0^l h(x)^(m - 2q) dx.

    The exponent is -2*alpha_{q-1} - 1 = m - 2q.  Divergent (and flagged so)
    when kappa (m - 2q) <= -1.
    """
    return warped_integral(profile, float(m - 2 * q))
