"""Bookkeeping for the four-stroke refrigeration cycle.

Strokes: (1) sudden switch-on of the coupling from the uncoupled thermal
state, (2) rethermalization of the coupled star, (3) sudden switch-off, (4)
rethermalization of the free qubits. All energies are in units of h and all
inverse temperatures are dimensionless (times h). Work is counted positive
when done on the star.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analytic
from .core import DomainError, ReducedParams

LD = np.longdouble


class UndefinedEfficiencyError(DomainError):
    """The cycle does no net work (g = 0), so no efficiency exists."""


@dataclass(frozen=True)
class CycleReport:
    """Energies at the stroke boundaries and everything derived from them.

    Works and heats are stored rather than recomputed from the rounded
    energies: W_cycle is often a small difference of O(N) numbers.
    ``central_cooling`` is the energy drawn from the central qubit,
    tanh(beta_eff h) - tanh(beta h).
    """

    x: float
    E0: float
    E1: float
    E2: float
    E3: float
    W1: float
    W2: float
    W_cycle: float
    Q2: float
    Q4: float
    beta_eff: float
    central_cooling: float

    @classmethod
    def from_energies(cls, x, E0, E1, E2, E3, beta_eff, central_cooling) -> "CycleReport":
        """Build a report from extended-precision stroke energies."""
        W1 = E1 - E0
        W2 = E3 - E2
        return cls(
            x=float(x), E0=float(E0), E1=float(E1), E2=float(E2), E3=float(E3),
            W1=float(W1), W2=float(W2), W_cycle=float(W1 + W2),
            Q2=float(E2 - E1), Q4=float(E0 - E3),
            beta_eff=float(beta_eff), central_cooling=float(central_cooling),
        )

    @property
    def h_int(self) -> float:
        """<H_int> in the correlated thermal state (end of stroke 2)."""
        return -self.W2

    def _require_work(self) -> float:
        if self.W_cycle == 0.0:
            raise UndefinedEfficiencyError("W_cycle = 0 (uncoupled star): efficiency is undefined")
        return self.W_cycle

    @property
    def epsilon(self) -> float:
        return self.central_cooling / self._require_work()

    @property
    def epsilon_whole(self) -> float:
        return self.Q4 / self._require_work()

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["h_int"] = self.h_int
        return out


def stroke_energies(p: ReducedParams) -> CycleReport:
    br = analytic._branches(p)
    r, N = LD(p.r), p.N
    t, u, B, C, D = br.t, br.u, br.B, br.C, br.D

    # written as -t - N t to match E3 bit for bit at r = 0
    E0 = -t - N * t
    # <H_int> in the uncoupled product state: r N tanh(x)^2
    W1 = N * r * t * t
    E1 = E0 + W1
    # -(g/beta) d ln Z / d g = -r N (p_up tanh a - p_down tanh b)
    h_int = -r * N * (C - u * D)
    # W1 - h_int and E0 - E3 rewritten with D = t (1 - B) and
    # C = (B + C) - B so that the O(1) parts cancel symbolically; for g < 0
    # every remaining term has the same sign
    tmu, BC = br.t_minus_u, br.B_plus_C
    W_cycle = N * r * (t * tmu - br.one_minus_tu * B + BC)
    Q4 = -tmu * br.one_minus_NC - N * t * BC
    # <S_z> after switch-off
    E3 = analytic._s_total(br, N)
    E2 = E3 + h_int
    return CycleReport(
        x=p.x, E0=float(E0), E1=float(E1), E2=float(E2), E3=float(E3),
        W1=float(W1), W2=float(-h_int), W_cycle=float(W_cycle),
        Q2=float(E2 - E1), Q4=float(Q4),
        beta_eff=float(br.x_eff), central_cooling=float(-br.t_minus_u),
    )


def efficiency(p: ReducedParams) -> float:
    """Heat drawn from the central qubit per unit of net cycle work."""
    return stroke_energies(p).epsilon


def efficiency_whole(p: ReducedParams) -> float:
    """Energy lost by the whole star (E0 - E3) per unit of net cycle work."""
    return stroke_energies(p).epsilon_whole


def efficiency_partial(p: ReducedParams, n: int) -> float:
    """Efficiency when the central qubit and ``n`` of the ancillas are used.

    The remaining ancillas are discarded and their energy change ignored.
    n = 0 gives :func:`efficiency`, n = N gives :func:`efficiency_whole`.
    """
    if not 0 <= n <= p.N:
        raise DomainError(f"n must lie in [0, {p.N}], got {n}")
    rep = stroke_energies(p)
    br = analytic._branches(p)
    # each ancilla goes from -tanh(x) to <S'_z>/N; the difference is -(t B + u C)
    ancilla_loss = br.t_minus_u * br.C - br.t * br.B_plus_C
    return float((LD(rep.central_cooling) + n * ancilla_loss) / LD(rep._require_work()))


def efficiency_recycled(p: ReducedParams, W_engine: float) -> float:
    """Central-qubit efficiency when an engine returns ``W_engine`` of the work.

    ``W_engine`` is in units of h and must be smaller than W_cycle.
    """
    rep = stroke_energies(p)
    W = rep._require_work()
    if not W_engine < W:
        raise DomainError(f"W_engine = {W_engine!r} must be below W_cycle = {W!r}")
    return rep.central_cooling / (W - W_engine)


@dataclass(frozen=True)
class CooperativeReport:
    """Pooled effective inverse temperatures (all times h)."""

    beta_eff: float
    beta_eff_whole: float
    beta_eff_ancilla: float
    n: int
    beta_eff_n: float
    epsilon_whole: float | None
    saturated: bool = False


def cooperative_temperatures(p: ReducedParams, n: int) -> CooperativeReport:
    """Effective temperatures for cooperative cooling with ``n`` ancillas.

    ``saturated`` is set when a pooled population underflows to zero, in
    which case the corresponding inverse temperature is reported as inf.
    """
    if not 0 <= n <= p.N:
        raise DomainError(f"n must lie in [0, {p.N}], got {n}")
    saturated = False

    def safe(fn, *args):
        nonlocal saturated
        with np.errstate(divide="ignore", over="ignore"):
            value = fn(p, *args)
        if not math.isfinite(value):
            saturated = True
            return math.inf
        return value

    rep = stroke_energies(p)
    try:
        eps_whole = rep.epsilon_whole
    except UndefinedEfficiencyError:
        eps_whole = None
    return CooperativeReport(
        beta_eff=rep.beta_eff,
        beta_eff_whole=safe(analytic.beta_eff_whole),
        beta_eff_ancilla=safe(analytic.beta_eff_ancilla),
        n=n,
        beta_eff_n=safe(analytic.beta_eff_n, n),
        epsilon_whole=eps_whole,
        saturated=saturated,
    )
