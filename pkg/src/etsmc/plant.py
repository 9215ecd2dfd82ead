"""Dimensionless CSTR dynamics, disturbance signals and parameter conversion.

The simulated model is the two-state dimensionless form of an ideal,
non-isothermal CSTR with an irreversible exothermic first-order reaction
A -> B, actuated through the coolant temperature channel.  The physical
(kelvin / kmol) layer exists only for parameter conversion and reporting;
the integrator always runs on the dimensionless equations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

SINGULAR_TOL = 1e-12


class PlantError(ValueError):
    """Base class for plant-level errors."""


class SingularExponentError(PlantError):
    """Raised when 1 + x2/gamma is numerically zero (nonphysical temperature)."""


class InvalidParameterError(PlantError):
    """Raised when a parameter record violates its positivity invariants."""


@dataclass(frozen=True, slots=True)
class DimlessState:
    """Pair (x1 composition, x2 temperature), both dimensionless."""

    x1: float
    x2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2])

    def is_finite(self) -> bool:
        return math.isfinite(self.x1) and math.isfinite(self.x2)


@dataclass(frozen=True, slots=True)
class DimlessParams:
    """Plant constants of the dimensionless state model.

    da       Damkohler number
    gamma    activation-to-kinetic-energy ratio
    b_rise   adiabatic temperature rise
    beta     heat transfer coefficient
    x2c0     nominal dimensionless coolant temperature
    """

    da: float
    gamma: float
    b_rise: float
    beta: float
    x2c0: float

    def __post_init__(self) -> None:
        for name in ("da", "gamma", "b_rise", "beta"):
            if not getattr(self, name) > 0.0:
                raise InvalidParameterError(f"{name} must be positive")


@dataclass(frozen=True, slots=True)
class PhysicalParams:
    """Physical CSTR constants (kelvin / kmol / m^3 / min units)."""

    k0: float      # rate constant, 1/min
    caf0: float    # nominal feed concentration, kmol/m^3
    f0: float      # nominal flow, m^3/min
    rho: float     # density, g/m^3
    cp: float      # specific heat, cal/(degC g)
    dh: float      # heat of reaction, cal/kmol, negative for exothermic
    rhoc: float    # coolant density, g/m^3
    cpc: float     # coolant specific heat, cal/(degC g)
    v: float       # volume, m^3
    fc: float      # coolant flow, m^3/min
    e: float       # activation energy, J/mol
    r: float       # gas constant, J/(mol K)
    tf0: float     # nominal feed temperature, K
    tc0: float     # nominal coolant temperature, K
    a: float       # heat-transfer model parameter
    b: float       # heat-transfer model exponent, sign unrestricted

    def __post_init__(self) -> None:
        positive = ("k0", "caf0", "f0", "rho", "cp", "rhoc", "cpc",
                    "v", "fc", "e", "r", "tf0", "tc0", "a")
        for name in positive:
            if not getattr(self, name) > 0.0:
                raise InvalidParameterError(f"{name} must be positive")
        if not self.dh < 0.0:
            raise InvalidParameterError("dh must be negative (exothermic)")
        if not math.isfinite(self.e / (self.r * self.tf0)):
            raise InvalidParameterError("derived gamma is not finite")


@dataclass(frozen=True)
class Disturbance:
    """Bounded, measurable disturbance pair.

    d1 enters the temperature equation, d2 the composition equation.
    Evaluation asserts the declared sup bound on every call.
    """

    d1: Callable[[float], float]
    d2: Callable[[float], float]
    bound: float

    def eval(self, t: float) -> tuple[float, float]:
        v1 = self.d1(t)
        v2 = self.d2(t)
        if abs(v1) > self.bound + 1e-15 or abs(v2) > self.bound + 1e-15:
            raise PlantError(f"disturbance exceeds declared bound at t={t}")
        return v1, v2

    @classmethod
    def zero(cls) -> "Disturbance":
        return cls(d1=lambda t: 0.0, d2=lambda t: 0.0, bound=0.0)

    @classmethod
    def sinusoidal(cls, amp1: float, freq1: float,
                   amp2: float, freq2: float) -> "Disturbance":
        return cls(
            d1=lambda t: amp1 * math.sin(freq1 * t),
            d2=lambda t: amp2 * math.sin(freq2 * t),
            bound=max(abs(amp1), abs(amp2)),
        )


def _reaction_exponent(x2: float, gamma: float) -> float:
    den = 1.0 + x2 / gamma
    if abs(den) < SINGULAR_TOL:
        raise SingularExponentError(
            f"1 + x2/gamma vanishes (x2={x2}, gamma={gamma})")
    return math.exp(x2 / den)


def eval_f1(x: DimlessState, p: DimlessParams) -> float:
    """Undisturbed composition drift -x1 + Da(1-x1)exp(x2/(1+x2/gamma))."""
    ex = _reaction_exponent(x.x2, p.gamma)
    return -x.x1 + p.da * (1.0 - x.x1) * ex


def eval_f2(x: DimlessState, p: DimlessParams) -> float:
    """Undisturbed temperature drift; control and d1 are added by the caller."""
    ex = _reaction_exponent(x.x2, p.gamma)
    return (-x.x2 + p.b_rise * p.da * (1.0 - x.x1) * ex
            - p.beta * (x.x2 - p.x2c0))


def state_derivative(x: DimlessState, u: float, t: float,
                     p: DimlessParams, d: Disturbance) -> DimlessState:
    """Full state rate (f1 - d2, f2 + beta*u + d1) at time t."""
    d1v, d2v = d.eval(t)
    return DimlessState(
        x1=eval_f1(x, p) - d2v,
        x2=eval_f2(x, p) + p.beta * u + d1v,
    )


def jacobian(x: DimlessState, p: DimlessParams) -> np.ndarray:
    """Analytic 2x2 Jacobian of (f1, f2) at x.

    d/dx2 of x2/(1+x2/gamma) is 1/(1+x2/gamma)^2.
    """
    den = 1.0 + x.x2 / p.gamma
    if abs(den) < SINGULAR_TOL:
        raise SingularExponentError(
            f"1 + x2/gamma vanishes (x2={x.x2}, gamma={p.gamma})")
    ex = math.exp(x.x2 / den)
    dex = ex / (den * den)  # derivative of the exponential w.r.t. x2
    rem = 1.0 - x.x1
    return np.array([
        [-1.0 - p.da * ex, p.da * rem * dex],
        [-p.b_rise * p.da * ex, -1.0 + p.b_rise * p.da * rem * dex - p.beta],
    ])


def heat_transfer_term(pp: PhysicalParams) -> float:
    """hA = a Fc^(b+1) / (Fc + a Fc^b / (2 rho_c Cp_c))."""
    den = pp.fc + pp.a * pp.fc ** pp.b / (2.0 * pp.rhoc * pp.cpc)
    if abs(den) < SINGULAR_TOL:
        raise InvalidParameterError("heat-transfer denominator vanishes")
    return pp.a * pp.fc ** (pp.b + 1.0) / den


def physical_to_dimensionless(pp: PhysicalParams) -> DimlessParams:
    """Convert physical constants to the dimensionless parameter record."""
    gamma = pp.e / (pp.r * pp.tf0)
    b_rise = (-pp.dh) * pp.caf0 * gamma / (pp.rho * pp.cp * pp.tf0)
    da = pp.k0 * math.exp(-gamma) * pp.v / pp.f0
    beta = heat_transfer_term(pp) / (pp.rho * pp.cp * pp.f0)
    x2c0 = gamma * (pp.tc0 - pp.tf0) / pp.tf0
    return DimlessParams(da=da, gamma=gamma, b_rise=b_rise,
                         beta=beta, x2c0=x2c0)


def kelvin_to_x2(temp: float, tf0: float, gamma: float) -> float:
    """Dimensionless temperature gamma*(T - Tf0)/Tf0."""
    if not tf0 > 0.0:
        raise InvalidParameterError("tf0 must be positive")
    return gamma * (temp - tf0) / tf0


def x2_to_kelvin(x2: float, tf0: float, gamma: float) -> float:
    """Inverse of kelvin_to_x2."""
    if not tf0 > 0.0:
        raise InvalidParameterError("tf0 must be positive")
    return tf0 + x2 * tf0 / gamma


def reaction_rate(ca: float, temp: float, pp: PhysicalParams) -> float:
    """Arrhenius rate k0 exp(-E/(R T)) CA, kmol/m^3/min."""
    if not temp > 0.0:
        raise PlantError("temperature must be positive")
    return pp.k0 * math.exp(-pp.e / (pp.r * temp)) * ca


def composition_nullcline(x2: float, p: DimlessParams) -> float:
    """The x1 solving f1(x1, x2) = 0 for a given x2."""
    rex = p.da * _reaction_exponent(x2, p.gamma)
    return rex / (1.0 + rex)


def find_equilibria(p: DimlessParams, u: float,
                    box: tuple[tuple[float, float], tuple[float, float]]
                    = ((0.0, 1.0), (0.0, 6.0)),
                    grid: int = 20,
                    tol: float = 1e-10,
                    max_iter: int = 60) -> list[DimlessState]:
    """Undisturbed equilibria of the state model at fixed control u.

    Newton iterations with the analytic Jacobian, seeded from a grid x grid
    lattice over box; converged roots inside the box are deduplicated.
    Returns an empty list if nothing converges (diagnostic, not fatal).
    """
    (x1lo, x1hi), (x2lo, x2hi) = box
    margin = 1e-6
    roots: list[np.ndarray] = []
    seeds1 = np.linspace(x1lo, x1hi, grid)
    seeds2 = np.linspace(x2lo, x2hi, grid)
    for s1 in seeds1:
        for s2 in seeds2:
            z = np.array([s1, s2])
            ok = False
            for _ in range(max_iter):
                st = DimlessState(z[0], z[1])
                try:
                    fv = np.array([eval_f1(st, p),
                                   eval_f2(st, p) + p.beta * u])
                    jac = jacobian(st, p)
                except (SingularExponentError, OverflowError):
                    # the iterate wandered past the exponent singularity
                    break
                if not np.all(np.isfinite(fv)):
                    break
                if np.linalg.norm(fv) < tol:
                    ok = True
                    break
                try:
                    step = np.linalg.solve(jac, fv)
                except np.linalg.LinAlgError:
                    break
                z = z - step
                if not np.all(np.isfinite(z)):
                    break
            if not ok:
                continue
            if not (x1lo - margin <= z[0] <= x1hi + margin
                    and x2lo - margin <= z[1] <= x2hi + margin):
                continue
            if all(np.linalg.norm(z - r) > 1e-6 for r in roots):
                roots.append(z)
    roots.sort(key=lambda r: (r[1], r[0]))
    return [DimlessState(float(r[0]), float(r[1])) for r in roots]
