"""Parameter containers, unit conversion and the dimensionless reduction.

Everything downstream works with ``x = beta*h`` and ``r = g/h``; physical
units (GHz gaps, mK temperatures) only appear at the edges.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import constants


class SpinStarError(Exception):
    """Base class for errors raised by this package."""


class DomainError(SpinStarError, ValueError):
    """An input lies outside the domain where a quantity is defined."""


class ResourceLimitError(SpinStarError, RuntimeError):
    """A request exceeds the enumeration or dense-matrix ceiling."""


class UnitConvention(str, enum.Enum):
    """How a gap quoted in GHz is turned into an energy.

    ``angular`` reads the gap as an angular frequency (E = hbar * omega),
    ``ordinary`` as a cyclic frequency (E = h_Planck * nu).
    """

    ANGULAR = "angular"
    ORDINARY = "ordinary"

    @property
    def energy_per_ghz(self) -> float:
        """Energy in joules of a 1 GHz gap under this convention."""
        if self is UnitConvention.ANGULAR:
            return constants.hbar * 1e9
        return constants.h * 1e9


DEFAULT_CONVENTION = UnitConvention.ANGULAR


def beta_from_temperature(T_mK: float, convention: UnitConvention = DEFAULT_CONVENTION) -> float:
    """Inverse temperature in 1/GHz for an environment at ``T_mK`` millikelvin.

    The product ``beta * h`` with ``h`` in GHz is the dimensionless ratio of
    the gap energy to k_B T. ``T_mK = inf`` gives 0.
    """
    if not T_mK > 0:
        raise DomainError(f"temperature must be positive, got {T_mK!r} mK")
    convention = UnitConvention(convention)
    return convention.energy_per_ghz / (constants.k * T_mK * 1e-3)


def temperature_from_beta(beta: float, convention: UnitConvention = DEFAULT_CONVENTION) -> float:
    """Inverse of :func:`beta_from_temperature`; returns millikelvin."""
    if not beta > 0:
        raise DomainError(f"inverse temperature must be positive, got {beta!r}")
    convention = UnitConvention(convention)
    return convention.energy_per_ghz / (constants.k * beta) * 1e3


@dataclass(frozen=True)
class ReducedParams:
    """Dimensionless spin-star parameters: x = beta*h, r = g/h, N ancillas."""

    x: float
    r: float
    N: int

    def __post_init__(self):
        if not (self.x > 0 and math.isfinite(self.x)):
            raise DomainError(f"x = beta*h must be positive and finite, got {self.x!r}")
        if not math.isfinite(self.r):
            raise DomainError(f"r = g/h must be finite, got {self.r!r}")
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "r", float(self.r))

    def with_r(self, r: float) -> "ReducedParams":
        return ReducedParams(self.x, r, self.N)

    def with_N(self, N: int) -> "ReducedParams":
        return ReducedParams(self.x, self.r, N)


@dataclass(frozen=True)
class SpinStarParams:
    """Physical spin-star parameters.

    Attributes:
        h: qubit gap parameter (GHz).
        g: center-ancilla coupling (GHz); negative is ferromagnetic.
        N: number of ancilla qubits.
        beta: inverse temperature (1/GHz).
    """

    h: float
    g: float
    N: int
    beta: float

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise DomainError(f"h must be positive, got {self.h!r}")
        if not math.isfinite(self.g):
            raise DomainError(f"g must be finite, got {self.g!r}")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be positive, got {self.beta!r}")
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))

    @classmethod
    def from_temperature(cls, h: float, g: float, N: int, T_mK: float,
                         convention: UnitConvention = DEFAULT_CONVENTION) -> "SpinStarParams":
        return cls(h=h, g=g, N=N, beta=beta_from_temperature(T_mK, convention))

    def temperature(self, convention: UnitConvention = DEFAULT_CONVENTION) -> float:
        """Environment temperature in mK."""
        return temperature_from_beta(self.beta, convention)


def reduce(params: SpinStarParams) -> ReducedParams:
    return ReducedParams(x=params.beta * params.h, r=params.g / params.h, N=params.N)


def expand(reduced: ReducedParams, h: float) -> SpinStarParams:
    """Rebuild physical parameters for a chosen gap ``h`` (GHz)."""
    return SpinStarParams(h=h, g=reduced.r * h, N=reduced.N, beta=reduced.x / h)


_LN2 = np.log(np.longdouble(2))


def logcosh(y):
    """ln(cosh(y)) without overflow for large |y|, in extended precision."""
    a = np.abs(np.asarray(y, dtype=np.longdouble))
    # small |y|: cosh(y) - 1 = 2 sinh^2(y/2) avoids the cancellation of the large-|y| form
    small = np.log1p(2 * np.sinh(np.minimum(a, 1) / 2) ** 2)
    return np.where(a < 1, small, a + np.log1p(np.exp(-2 * a)) - _LN2)[()]


def half_log_ratio(ground, excited, diff) -> float:
    """(1/2) ln(ground/excited), given also diff = ground - excited.

    Near parity the ratio is 1 + diff/excited and log1p keeps the digits
    that a plain quotient would lose.
    """
    if abs(diff) <= excited / 2:
        return float(np.log1p(diff / excited) / 2)
    with np.errstate(divide="ignore"):
        return float(np.log(ground / excited) / 2)
