"""Pinned-parameter self-check of the closed forms against independent oracles."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import analytic, collision, cycle, oracle
from .core import ReducedParams, expand

PINNED_N = (1, 2, 6, 12)
PINNED_X = (0.1, 1.0, 5.0)
PINNED_R = (-2.0, -1.0, -0.1, 0.0, 1.0)
REL_TOL = 1e-12


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def rel_error(value: float, reference: float) -> float:
    """Relative error, falling back to absolute error when the reference is 0."""
    if reference == 0:
        return abs(value)
    return abs(value - reference) / abs(reference)


def closed_form_values(p: ReducedParams, beta_eff_perturbation: float = 0.0) -> dict:
    """Closed-form counterparts of :class:`oracle.OracleValues`, keyed alike.

    ``beta_eff_perturbation`` scales beta_eff by (1 + perturbation); it exists
    only to prove the comparison can see a corrupted value.
    """
    st = analytic.central_populations(p)
    mag = analytic.magnetizations(p)
    rep = cycle.stroke_energies(p)
    return {
        "log_z": analytic.log_partition_function(p),
        "p_up": st.p_up,
        "p_down": st.p_down,
        "beta_eff": st.beta_eff * (1 + beta_eff_perturbation),
        "s_total": mag.s_total,
        "s_ancilla": mag.s_ancilla,
        "E0": rep.E0,
        "E1": rep.E1,
        "E2": rep.E2,
        "E3": rep.E3,
        "h_int": rep.h_int,
        "W_cycle": rep.W_cycle,
        "beta_eff_whole": analytic.beta_eff_whole(p),
        "beta_eff_ancilla": analytic.beta_eff_ancilla(p),
        "beta_eff_n": tuple(analytic.beta_eff_n(p, n) for n in range(p.N + 1)),
    }


def compare_with_oracle(p: ReducedParams, tol: float = REL_TOL, beta_eff_perturbation: float = 0.0) -> list:
    """List of (field, closed form, oracle, relative error) exceeding ``tol``."""
    got = closed_form_values(p, beta_eff_perturbation)
    ref = oracle.oracle_values(p).as_dict()
    bad = []
    for key, want in ref.items():
        pairs = zip(got[key], want) if isinstance(want, tuple) else [(got[key], want)]
        for a, b in pairs:
            err = rel_error(a, b)
            if not err <= tol:
                bad.append((key, a, b, err))
    return bad


def _pinned_grid():
    for N in PINNED_N:
        for x in PINNED_X:
            for r in PINNED_R:
                yield ReducedParams(x, r, N)


def check_oracle_equivalence(beta_eff_perturbation: float = 0.0) -> str | None:
    for p in _pinned_grid():
        bad = compare_with_oracle(p, beta_eff_perturbation=beta_eff_perturbation)
        if bad:
            key, a, b, err = bad[0]
            return f"{key} at {p}: closed form {a!r} vs enumeration {b!r} (rel {err:.2e})"
    return None


def check_pinned_values(beta_eff_perturbation: float = 0.0) -> str | None:
    p1 = ReducedParams(1.0, -1.0, 1)
    z = analytic.partition_function(p1)
    exact_z = 3 * math.exp(-1) + math.exp(3)
    if rel_error(z, exact_z) > REL_TOL:
        return f"Z(x=1, r=-1, N=1) = {z!r}, expected {exact_z!r}"
    p_down = analytic.central_populations(p1).p_down
    if abs(p_down - 0.96528) > 5e-6:
        return f"P(down) at x=1, r=-1, N=1 is {p_down!r}, expected about 0.96528"
    x_eff = analytic.beta_eff(ReducedParams(1.0, -1.0, 6)) * (1 + beta_eff_perturbation)
    exact = 1 + 3 * math.log(math.cosh(2.0))
    if rel_error(x_eff, exact) > REL_TOL:
        return f"x_eff(x=1, r=-1, N=6) = {x_eff!r}, expected 1 + 3 ln cosh 2 = {exact!r}"
    return None


def check_first_law() -> str | None:
    for p in _pinned_grid():
        rep = cycle.stroke_energies(p)
        total = rep.W_cycle + rep.Q2 + rep.Q4
        scale = max(abs(rep.W_cycle), abs(rep.Q2), abs(rep.Q4), 1e-300)
        if abs(total) > REL_TOL * scale:
            return f"W + Q2 + Q4 = {total!r} at {p}"
    return None


# at r = -100 the exact gap (N+1)x - x_eff is about N exp(-198 x); it only
# drops below 1e-10 relative once x is a little above 0.1
BOUND_X = (0.5, 1.0, 2.0, 5.0)


def check_bounds() -> str | None:
    for N in (1, 6, 20):
        for x in BOUND_X:
            top = (N + 1) * x
            x_eff = analytic.beta_eff(ReducedParams(x, -100.0, N))
            if abs(x_eff - top) > 1e-10 * top:
                return f"x_eff at r=-100, x={x}, N={N} is {x_eff!r}, bound {top!r}"
    for p in _pinned_grid():
        if p.r < 0:
            x_eff = analytic.beta_eff(p)
            if not p.x < x_eff < (p.N + 1) * p.x:
                return f"x_eff = {x_eff!r} outside (x, (N+1)x) at {p}"
    return None


def check_monotonicity() -> str | None:
    rs = np.linspace(-3, 3, 201)
    for N in PINNED_N:
        for x in PINNED_X:
            vals = [analytic.beta_eff(ReducedParams(x, r, N)) for r in rs]
            if not all(b < a for a, b in zip(vals, vals[1:])):
                return f"x_eff not strictly decreasing in r at x={x}, N={N}"
            p = ReducedParams(x, -0.7, N)
            d = 1e-6
            fd = (analytic.beta_eff(p.with_r(-0.7 + d)) - analytic.beta_eff(p.with_r(-0.7 - d))) / (2 * d)
            if rel_error(analytic.beta_eff_derivative(p), fd) > 1e-6:
                return f"derivative {analytic.beta_eff_derivative(p)!r} vs finite difference {fd!r} at {p}"
    return None


def check_cooperative_ordering() -> str | None:
    for p in _pinned_grid():
        if p.r >= 0 or p.N < 2:
            continue
        chain = [analytic.beta_eff_n(p, n) for n in range(p.N + 1)]
        if rel_error(chain[0], analytic.beta_eff(p)) > REL_TOL:
            return f"beta_eff_n(0) != beta_eff at {p}"
        if rel_error(chain[-1], analytic.beta_eff_whole(p)) > REL_TOL:
            return f"beta_eff_n(N) != beta_eff_whole at {p}"
        anc = analytic.beta_eff_ancilla(p)
        if not all(a > b for a, b in zip(chain, chain[1:])) or not chain[-2] > anc:
            return f"cooperative ordering broken at {p}"
    return None


def check_dense_ising() -> str | None:
    for p in (ReducedParams(1.0, -1.0, 6), ReducedParams(0.5, 0.5, 3)):
        dense = oracle.dense_cycle("ising", expand(p, 1.0))
        closed = cycle.stroke_energies(p)
        for key in ("E0", "E1", "E2", "E3", "W_cycle", "beta_eff"):
            a, b = getattr(closed, key), getattr(dense, key)
            if rel_error(a, b) > 1e-11:
                return f"{key}: closed form {a!r} vs dense {b!r} at {p}"
    return None


def check_kms_fixed_point() -> str | None:
    m = collision.TargetIsingModel((1.0, 1.5), 0.25)
    beta, beta_eff = 0.4, 1.0
    refs = collision.refrigerant_baths(m, beta, beta_eff, 6)
    ss = collision.steady_state(collision.build_liouvillian(m, [r.bath for r in refs]))
    infidelity = 1 - collision.fidelity(ss, collision.gibbs_state(m, beta_eff))
    if infidelity > 1e-10:
        return f"steady state infidelity to Gibbs(beta_eff) is {infidelity:.2e}"
    return None


CHECKS = (
    ("oracle equivalence", check_oracle_equivalence, True),
    ("pinned values", check_pinned_values, True),
    ("first law", check_first_law, False),
    ("asymptotic bound", check_bounds, False),
    ("monotonicity and derivative", check_monotonicity, False),
    ("cooperative ordering", check_cooperative_ordering, False),
    ("dense Ising cycle", check_dense_ising, False),
    ("collision KMS fixed point", check_kms_fixed_point, False),
)


def run_selftest(beta_eff_perturbation: float = 0.0) -> list:
    """Run every check; the perturbation is forwarded to the checks that use beta_eff."""
    results = []
    for name, fn, takes_perturbation in CHECKS:
        t0 = time.perf_counter()
        try:
            failure = fn(beta_eff_perturbation) if takes_perturbation else fn()
        except Exception as exc:  # a crash is a failed check, not an aborted run
            failure = f"raised {type(exc).__name__}: {exc}"
        results.append(CheckResult(name, failure is None, failure or "ok", time.perf_counter() - t0))
    return results
