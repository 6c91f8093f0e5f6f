"""Closed-form statistical mechanics of the longitudinal Ising spin-star.

All functions take :class:`~spinstar.core.ReducedParams` and return
dimensionless numbers: energies in units of h, inverse temperatures as
``beta*h``.

Conditioning on the central spin z0 = +1 (up) or -1 (down) leaves N free
ancillas in a field h + g*z0, so every quantity is a two-branch mixture.
Probabilities are computed in the log domain so that exponentially small
excited populations keep full relative precision, and intermediate sums run
in extended precision because several outputs (W_cycle, <H_int>) are small
differences of O(N) terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, ReducedParams, half_log_ratio, logcosh

@dataclass(frozen=True)
class CentralQubitState:
    """Populations of the central qubit and its effective inverse temperature.

    ``beta_eff`` is dimensionless (beta_eff * h). ``coherence`` is the modulus
    of the off-diagonal element of the reduced state; it is zero for the
    Ising model and only populated by the dense oracle.
    """

    p_up: float
    p_down: float
    beta_eff: float
    coherence: float = 0.0

    @property
    def has_coherence(self) -> bool:
        return self.coherence > 1e-12


@dataclass(frozen=True)
class MagnetizationReport:
    """<S_z> summed over all N+1 qubits and <S'_z> summed over the ancillas."""

    s_total: float
    s_ancilla: float


LD = np.longdouble
_LN2 = np.log(LD(2))


def _expit(t):
    # 1/(1+exp(-t)), stable for either sign
    return np.exp(-np.logaddexp(LD(0), t * -1))


@dataclass(frozen=True)
class _Branches:
    """Extended-precision pieces shared by the closed forms.

    With t = tanh x, u = tanh x_eff and c = cosh(a) cosh(b), the mixtures of
    tanh(a), tanh(b) that the observables need reduce to
    t_minus_u = t - u, one_minus_tu = 1 - t u, B = sinh(xr)^2 / c,
    C = sinh(2xr) / (2c), D = sinh(2x) / (2c) and B_plus_C = expm1(2xr) / (2c).
    None of these involves subtracting O(1) numbers.
    """

    p_up: np.longdouble
    p_down: np.longdouble
    a: np.longdouble  # x(1+r): ancilla field argument when the center is up
    b: np.longdouble  # x(1-r): ... when the center is down
    log_z: np.longdouble
    x_eff: np.longdouble
    t: np.longdouble
    u: np.longdouble
    t_minus_u: np.longdouble
    one_minus_tu: np.longdouble
    B: np.longdouble
    C: np.longdouble
    D: np.longdouble
    B_plus_C: np.longdouble
    one_minus_NC: np.longdouble


def _log_abs_sinh(z):
    z = abs(z)
    with np.errstate(divide="ignore"):
        return z + np.log(-np.expm1(-2 * z)) - _LN2


def _log_abs_expm1(z):
    # ln|e^z - 1|
    with np.errstate(divide="ignore"):
        if z > 0:
            return z + np.log(-np.expm1(-z))
        return np.log(-np.expm1(z))


def _signed_exp(sign, log_mag):
    return sign * np.exp(log_mag) if sign else LD(0)


def _branches(p: ReducedParams) -> _Branches:
    x, r, N = LD(p.x), LD(p.r), p.N
    a = x * (1 + r)
    b = x * (1 - r)
    lca, lcb = logcosh(a), logcosh(b)
    # log of the two terms of Z without the common 2^N factor
    lu = -x + N * lca
    ld = x + N * lcb
    lsum = np.logaddexp(lu, ld)
    x_eff, shift = _x_eff_and_shift(x, r, N, a, b, lca, lcb)
    lcc = lca + lcb
    C = _signed_exp(np.sign(r), _log_abs_sinh(2 * x * r) - _LN2 - lcc)
    if N == 1 and r > 0:
        # 1 - C = (cosh 2x + e^{-2xr}) / (2c), positive without cancellation
        one_minus_NC = np.exp(np.logaddexp(logcosh(2 * x), -2 * x * r) - _LN2 - lcc)
    else:
        one_minus_NC = 1 - N * C
    return _Branches(
        p_up=np.exp(lu - lsum),
        p_down=np.exp(ld - lsum),
        a=a,
        b=b,
        log_z=N * _LN2 + lsum,
        x_eff=x_eff,
        t=np.tanh(x),
        u=np.tanh(x_eff),
        # tanh x - tanh y = sinh(x - y) / (cosh x cosh y)
        t_minus_u=_signed_exp(-np.sign(shift), _log_abs_sinh(shift) - logcosh(x) - logcosh(x_eff)),
        # 1 - tanh x tanh y = cosh(x - y) / (cosh x cosh y)
        one_minus_tu=np.exp(logcosh(shift) - logcosh(x) - logcosh(x_eff)),
        B=np.exp(2 * _log_abs_sinh(x * r) - lcc) if r else LD(0),
        C=C,
        # sinh(2x) / (2c) as tanh(x) cosh(x)^2 / c, which is exactly t at r = 0
        D=np.tanh(x) * np.exp(2 * logcosh(x) - lcc),
        B_plus_C=_signed_exp(np.sign(r), _log_abs_expm1(2 * x * r) - _LN2 - lcc),
        one_minus_NC=one_minus_NC,
    )


def _x_eff_and_shift(x, r, N, a, b, lca, lcb):
    # x_eff and x_eff - x = (N/2)(ln cosh b - ln cosh a), each formed directly
    if min(abs(a), abs(b)) < 1:
        shift = LD(N) / 2 * (lcb - lca)
        return x + shift, shift
    # both logcosh terms are |y| + tail - ln2 and |b| - |a| = -2x clip(r, -1, 1)
    # exactly, so only the exponentially small tails remain to be subtracted
    tails = LD(N) / 2 * (np.log1p(np.exp(-2 * abs(b))) - np.log1p(np.exp(-2 * abs(a))))
    pull = N * np.clip(r, -1, 1)
    return x * (1 - pull) + tails, -x * pull + tails


def log_partition_function(p: ReducedParams) -> float:
    """ln Z_tot with Z_tot = 2^N (e^-x cosh^N(x(1+r)) + e^x cosh^N(x(1-r)))."""
    return float(_branches(p).log_z)


def partition_function(p: ReducedParams) -> float:
    """Z_tot in the linear domain; raises OverflowError if not representable."""
    return math.exp(log_partition_function(p))


def central_populations(p: ReducedParams) -> CentralQubitState:
    br = _branches(p)
    return CentralQubitState(p_up=float(br.p_up), p_down=float(br.p_down), beta_eff=float(br.x_eff))


def beta_eff(p: ReducedParams) -> float:
    """Effective inverse temperature of the central qubit, as x_eff = beta_eff*h.

    x_eff = x + (N/2) [ln cosh(x(1-r)) - ln cosh(x(1+r))], which is
    (1/2) ln(P_down/P_up) written out.
    """
    return float(_branches(p).x_eff)


def beta_eff_derivative(p: ReducedParams) -> float:
    """d x_eff / d r = -(N x / 2) [tanh(x(1-r)) + tanh(x(1+r))].

    Dimensionless; the physical derivative d beta_eff / d g is this value
    divided by h**2. The bracket equals sinh(2x) / (cosh(x(1-r)) cosh(x(1+r))),
    which is strictly positive and free of cancellation when both tanh terms
    saturate.
    """
    return float(-p.N * LD(p.x) * _branches(p).D)


def _s_ancilla(br: _Branches, N: int):
    # p_up tanh a + p_down tanh b = D - u C
    return -N * (br.D - br.u * br.C)


def _s_total(br: _Branches, N: int):
    # -u + S'_z = -u (1 - N C) - N D
    return -br.u * br.one_minus_NC - N * br.D


def magnetizations(p: ReducedParams) -> MagnetizationReport:
    """<S_z> (all spins) and <S'_z> (ancillas only), as totals."""
    br = _branches(p)
    s_anc = _s_ancilla(br, p.N)
    return MagnetizationReport(s_total=float(_s_total(br, p.N)), s_ancilla=float(s_anc))


@dataclass(frozen=True)
class QubitPopulations:
    """Excited (up) and ground (down) probability of one qubit, or a pooled sum.

    ``beta`` is (1/2) ln(ground/excited), the beta*h of the matching Gibbs
    qubit, computed before the populations are rounded to floats.
    """

    excited: float
    ground: float
    beta: float


def _ancilla_ld(br: _Branches):
    # P(z_n=+1 | center) = 1/(1+e^{2y}) for field argument y
    excited = br.p_up * _expit(-2 * br.a) + br.p_down * _expit(-2 * br.b)
    ground = br.p_up * _expit(2 * br.a) + br.p_down * _expit(2 * br.b)
    return excited, ground


def ancilla_populations(p: ReducedParams) -> QubitPopulations:
    """Populations of a single ancilla (all ancillas are equivalent)."""
    e, g = _ancilla_ld(_branches(p))
    return QubitPopulations(excited=float(e), ground=float(g), beta=beta_eff_ancilla(p))


def _one_plus_n_tanh(n: int, y):
    # 1 + n tanh(y); for n = 1 use 2 expit(2y), which keeps precision as y -> -inf
    if n == 1:
        return 2 * _expit(2 * y)
    return 1 + n * np.tanh(y)


def _pooled_beta(p: ReducedParams, n: int) -> float:
    if not 0 <= n <= p.N:
        raise DomainError(f"n must lie in [0, {p.N}], got {n}")
    br = _branches(p)
    if n == 0:
        return float(br.x_eff)
    e, g = _ancilla_ld(br)
    # ground - excited summed over the pool, formed without subtracting O(1) numbers
    diff = br.p_down * _one_plus_n_tanh(n, br.b) - br.p_up * _one_plus_n_tanh(n, -br.a)
    return half_log_ratio(br.p_down + n * g, br.p_up + n * e, diff)


def pooled_populations(p: ReducedParams, n: int) -> QubitPopulations:
    """Summed populations of the central qubit plus ``n`` ancillas.

    Returns N_e and N_g with N_e + N_g = n + 1. These are the bath-population
    weights when the pooled qubits collide together with one target qubit.
    """
    if not 0 <= n <= p.N:
        raise DomainError(f"n must lie in [0, {p.N}], got {n}")
    br = _branches(p)
    e, g = _ancilla_ld(br)
    return QubitPopulations(excited=float(br.p_up + n * e), ground=float(br.p_down + n * g),
                            beta=_pooled_beta(p, n))


def beta_eff_whole(p: ReducedParams) -> float:
    """Pooled inverse temperature of all N+1 qubits after the interaction is off.

    Equal to (1/2) ln((N+1-<S_z>)/(N+1+<S_z>)); evaluated from the pooled
    populations directly.
    """
    return _pooled_beta(p, p.N)


def beta_eff_ancilla(p: ReducedParams) -> float:
    """Inverse temperature of one ancilla, (1/2) ln((1-<S'_z>/N)/(1+<S'_z>/N))."""
    br = _branches(p)
    e, g = _ancilla_ld(br)
    return half_log_ratio(g, e, br.D - br.u * br.C)


def beta_eff_n(p: ReducedParams, n: int) -> float:
    """Pooled inverse temperature of the central qubit and ``n`` ancillas.

    Same value as (1/2) ln((n+1 - n<S'_z>/N + tanh x_eff)/(n+1 + n<S'_z>/N - tanh x_eff)).
    """
    return _pooled_beta(p, n)


def solve_coupling(x: float, N: int, target_x_eff: float, tol: float = 1e-12) -> float:
    """Find r = g/h with beta_eff(x, r, N) == target_x_eff by bisection.

    The map r -> x_eff is strictly decreasing with range ((1-N)x, (N+1)x),
    so a root exists exactly when the target lies strictly inside it.
    """
    lower, upper = (1 - N) * x, (N + 1) * x
    if not lower < target_x_eff < upper:
        raise DomainError(
            f"target beta_eff*h = {target_x_eff!r} is unreachable: it must lie strictly "
            f"between (1-N)*beta*h = {lower!r} and the (N+1)*beta*h = {upper!r} bound"
        )

    def f(r):
        return beta_eff(ReducedParams(x, r, N)) - target_x_eff

    lo, hi = -1.0, 1.0
    for _ in range(64):
        if f(lo) >= 0:
            break
        lo *= 2.0
    for _ in range(64):
        if f(hi) <= 0:
            break
        hi *= 2.0
    if f(lo) < 0 or f(hi) > 0:
        raise DomainError(f"target beta_eff*h = {target_x_eff!r} is numerically indistinguishable from a bound")
    # f(lo) >= 0 >= f(hi)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if fm > 0:
            lo = mid
        else:
            hi = mid
    r = lo if abs(f(lo)) <= abs(f(hi)) else hi
    if abs(f(r)) > tol * abs(target_x_eff) and abs(f(r)) > 4 * np.spacing(abs(target_x_eff)):
        raise DomainError(f"bisection residual {f(r)!r} exceeds tolerance for target {target_x_eff!r}")
    return r
