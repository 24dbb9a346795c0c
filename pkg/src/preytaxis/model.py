"""Model ingredients: parameters, sensitivity function, kinetics, equilibrium.

The governing system on (0, L) with homogeneous Neumann boundaries is

    u_t = (d1 u' - chi u phi(w) w')' + alpha1 (1 - u) u + beta1 u w
    v_t = (d2 v' - xi  v phi(w) w')' + alpha2 (1 - v) v + beta2 v w
    w_t = d3 w'' + alpha3 (1 - w) w - beta31 u w - beta32 v w

u, v are predator densities, w the prey density.  phi is a polynomial
taxis-sensitivity; phi < 0 at the equilibrium prey level models group
defense (predators retreat from dense prey).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NoPositiveEquilibrium, NonPositiveParameter

__all__ = [
    "Parameters",
    "Sensitivity",
    "Equilibrium",
    "validate_parameters",
    "equilibrium",
    "kinetics",
    "sensitivity_eval",
]

_POSITIVE_FIELDS = (
    "d1", "d2", "d3",
    "alpha1", "alpha2", "alpha3",
    "beta1", "beta2", "beta31", "beta32",
    "L",
)


@dataclass(frozen=True)
class Parameters:
    """Rate constants, taxis coefficients and domain length.

    chi is the taxis strength of predator u and serves as the bifurcation
    parameter; xi is the (fixed) taxis strength of predator v.  Both may be
    any real number; every other field must be strictly positive.
    """

    d1: float
    d2: float
    d3: float
    alpha1: float
    alpha2: float
    alpha3: float
    beta1: float
    beta2: float
    beta31: float
    beta32: float
    chi: float
    xi: float
    L: float

    @property
    def coexistence(self) -> bool:
        """True iff a positive constant equilibrium exists."""
        return self.alpha3 > self.beta31 + self.beta32

    def with_chi(self, chi: float) -> "Parameters":
        return replace(self, chi=float(chi))

    def with_L(self, L: float) -> "Parameters":
        if not L > 0:
            raise NonPositiveParameter("L", L)
        return replace(self, L=float(L))


def validate_parameters(p: Parameters) -> Parameters:
    """Check positivity constraints; return p unchanged if they hold.

    Coexistence failure is *not* an error here: simulation without a
    positive equilibrium is legal, so it stays a queryable flag.
    """
    for name in _POSITIVE_FIELDS:
        value = getattr(p, name)
        if not (np.isfinite(value) and value > 0):
            raise NonPositiveParameter(name, value)
    for name in ("chi", "xi"):
        value = getattr(p, name)
        if not np.isfinite(value):
            raise NonPositiveParameter(name, value)
    return p


@dataclass(frozen=True)
class Sensitivity:
    """Polynomial taxis sensitivity phi(w), degree <= 4.

    coeffs[i] multiplies w**i.  A polynomial (rather than an arbitrary
    callback) keeps phi' and phi'' exact, which the pitchfork coefficient
    needs.
    """

    coeffs: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if len(c) == 0 or len(c) > 5:
            raise ValueError("sensitivity polynomial must have degree <= 4")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def product(cls, a: float, c: float = 1.0) -> "Sensitivity":
        """phi(w) = c * w * (a - w), the paper-style quadratic."""
        return cls((0.0, c * a, -c))

    def __call__(self, w):
        return sensitivity_eval(self, w)[0]


def sensitivity_eval(s: Sensitivity, w):
    """Evaluate (phi, phi', phi'') at w by Horner's rule.  Accepts arrays."""
    w = np.asarray(w, dtype=float) if np.ndim(w) else float(w)
    c = s.coeffs
    phi = 0.0
    for ck in reversed(c):
        phi = phi * w + ck
    dphi = 0.0
    for k in range(len(c) - 1, 0, -1):
        dphi = dphi * w + k * c[k]
    ddphi = 0.0
    for k in range(len(c) - 1, 1, -1):
        ddphi = ddphi * w + k * (k - 1) * c[k]
    return phi, dphi, ddphi


@dataclass(frozen=True)
class Equilibrium:
    """The positive constant coexistence state (u, v, w)."""

    u: float
    v: float
    w: float


def equilibrium(p: Parameters) -> Equilibrium:
    """Positive constant equilibrium; exists iff alpha3 > beta31 + beta32."""
    if not p.coexistence:
        raise NoPositiveEquilibrium(
            f"alpha3 = {p.alpha3} <= beta31 + beta32 = {p.beta31 + p.beta32}"
        )
    w = (p.alpha3 - p.beta31 - p.beta32) / (
        p.alpha3 + p.beta1 * p.beta31 / p.alpha1 + p.beta2 * p.beta32 / p.alpha2
    )
    return Equilibrium(
        u=1.0 + (p.beta1 / p.alpha1) * w,
        v=1.0 + (p.beta2 / p.alpha2) * w,
        w=w,
    )


def kinetics(p: Parameters, u, v, w):
    """Lotka-Volterra reaction terms (f1, f2, f3).  Accepts scalars or arrays."""
    f1 = p.alpha1 * (1.0 - u) * u + p.beta1 * u * w
    f2 = p.alpha2 * (1.0 - v) * v + p.beta2 * v * w
    f3 = p.alpha3 * (1.0 - w) * w - p.beta31 * u * w - p.beta32 * v * w
    return f1, f2, f3
