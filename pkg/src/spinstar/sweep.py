"""Parameter sweeps over (T, g, N, h) and the figure presets built on them.

A sweep evaluates one dimensionless quantity on the Cartesian product of
its grid axes (first axis outermost) and writes one CSV row per point.
Temperatures are in mK, gaps and couplings in GHz.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import analytic, cycle, oracle
from .core import (DomainError, ResourceLimitError, SpinStarParams, UnitConvention,
                   beta_from_temperature, reduce)

WORKERS_ENV = "SPINSTAR_WORKERS"
VARIABLES = ("T", "g", "r", "N", "h")
INTEGER_VARIABLES = {"N"}


@dataclass(frozen=True)
class Quantity:
    name: str
    description: str
    dense: bool = False


QUANTITIES = {
    q.name: q
    for q in (
        Quantity("teff_ratio", "T_eff/T of the central qubit (Ising)"),
        Quantity("efficiency", "cycle efficiency using the central qubit (Ising)"),
        Quantity("teff_whole", "pooled T_eff/T of all N+1 qubits after switch-off (Ising)"),
        Quantity("efficiency_whole", "cycle efficiency counting the energy loss of all qubits (Ising)"),
        Quantity("teff_ancilla", "T_eff/T of a single ancilla after switch-off (Ising)"),
        Quantity("heisenberg_teff", "T_eff/T of the central qubit, Heisenberg coupling (dense)", dense=True),
        Quantity("heisenberg_eff", "cycle efficiency, Heisenberg coupling (dense)", dense=True),
    )
}


@dataclass(frozen=True)
class SweepSpec:
    """What to evaluate and where.

    ``grid`` is a tuple of (variable, values) axes; ``fixed`` supplies every
    variable not on the grid. Coupling may be given either as ``g`` (GHz) or
    as ``r`` = g/h, never both.
    """

    quantity: str
    grid: tuple
    fixed: tuple = ()
    convention: UnitConvention = UnitConvention.ANGULAR
    oracle: bool = False
    notes: tuple = ()

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise DomainError(f"unknown quantity {self.quantity!r}; choose from {sorted(QUANTITIES)}")
        object.__setattr__(self, "convention", UnitConvention(self.convention))
        grid = tuple((str(k), tuple(v)) for k, v in self.grid)
        fixed = tuple(sorted(dict(self.fixed).items()))
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "fixed", fixed)
        if not grid or any(len(v) == 0 for _, v in grid):
            raise DomainError("sweep grid must be non-empty")
        names = [k for k, _ in grid] + [k for k, _ in fixed]
        for k in names:
            if k not in VARIABLES:
                raise DomainError(f"unknown sweep variable {k!r}; choose from {VARIABLES}")
        if len(set(names)) != len(names):
            raise DomainError(f"variable given twice across grid and fixed: {names}")
        if "g" in names and "r" in names:
            raise DomainError("give the coupling as g or as r = g/h, not both")
        missing = {"T", "N"} - set(names)
        if not ({"g", "r"} & set(names)):
            missing.add("g")
        if missing:
            raise DomainError(f"sweep needs values for {sorted(missing)}")
        for point in itertools.islice(self.points(), 1):
            _physical(point, self.convention)

    @property
    def axes(self) -> list:
        return [k for k, _ in self.grid]

    def points(self):
        fixed = dict(self.fixed)
        fixed.setdefault("h", 1.0)
        keys = self.axes
        for combo in itertools.product(*(v for _, v in self.grid)):
            yield {**fixed, **dict(zip(keys, combo))}

    def size(self) -> int:
        return math.prod(len(v) for _, v in self.grid)


def _physical(point: dict, convention: UnitConvention) -> SpinStarParams:
    h = float(point["h"])
    g = float(point["r"]) * h if "r" in point else float(point["g"])
    N = point["N"]
    if isinstance(N, float):
        if not N.is_integer():
            raise DomainError(f"N must be an integer, got {N!r}")
        N = int(N)
    return SpinStarParams(h=h, g=g, N=N, beta=beta_from_temperature(float(point["T"]), convention))


def _ratio(x: float, beta: float) -> float:
    # T_eff/T = x / (beta_eff h); an infinite beta_eff means the population saturated
    return 0.0 if math.isinf(beta) else x / beta


@lru_cache(maxsize=64)
def _heisenberg_spectrum(h: float, g: float, N: int) -> oracle.ThermalSpectrum:
    params = SpinStarParams(h=h, g=g, N=N, beta=1.0)
    return oracle.ThermalSpectrum(oracle.build_hamiltonian("heisenberg", params))


def evaluate(quantity: str, params: SpinStarParams) -> float:
    """Value of ``quantity`` at one physical parameter point (nan if undefined)."""
    if QUANTITIES[quantity].dense:
        if params.N > oracle.MAX_DENSE_N:
            raise ResourceLimitError(
                f"{quantity} needs dense diagonalization; N = {params.N} exceeds {oracle.MAX_DENSE_N}"
            )
        rep = oracle.heisenberg_cycle(params, _heisenberg_spectrum(params.h, params.g, params.N))
        if quantity == "heisenberg_teff":
            return _ratio(rep.x, rep.beta_eff)
        return _efficiency_or_nan(lambda: rep.epsilon)

    p = reduce(params)
    if quantity == "teff_ratio":
        return _ratio(p.x, analytic.beta_eff(p))
    if quantity == "teff_whole":
        with np.errstate(divide="ignore"):
            return _ratio(p.x, analytic.beta_eff_whole(p))
    if quantity == "teff_ancilla":
        with np.errstate(divide="ignore"):
            return _ratio(p.x, analytic.beta_eff_ancilla(p))
    rep = cycle.stroke_energies(p)
    if quantity == "efficiency":
        return _efficiency_or_nan(lambda: rep.epsilon)
    return _efficiency_or_nan(lambda: rep.epsilon_whole)


def _efficiency_or_nan(fn) -> float:
    try:
        return fn()
    except cycle.UndefinedEfficiencyError:
        return math.nan


def oracle_value(quantity: str, params: SpinStarParams) -> float | None:
    """Same quantity from exhaustive enumeration, or None when not applicable."""
    if QUANTITIES[quantity].dense or params.N > oracle.MAX_DENSE_N:
        return None
    p = reduce(params)
    ov = oracle.oracle_values(p)
    if quantity == "teff_ratio":
        return _ratio(p.x, ov.beta_eff)
    if quantity == "teff_whole":
        return _ratio(p.x, ov.beta_eff_whole)
    if quantity == "teff_ancilla":
        return _ratio(p.x, ov.beta_eff_ancilla)
    if ov.W_cycle == 0:
        return math.nan
    if quantity == "efficiency":
        return (math.tanh(ov.beta_eff) - math.tanh(p.x)) / ov.W_cycle
    return (ov.E0 - ov.E3) / ov.W_cycle


def _evaluate_point(task):
    quantity, point, convention, with_oracle = task
    params = _physical(point, convention)
    value = evaluate(quantity, params)
    if not with_oracle:
        return value, None
    return value, oracle_value(quantity, params)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise DomainError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise DomainError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


@dataclass
class SweepResult:
    spec: SweepSpec
    points: list
    values: list
    oracle_values: list = field(default_factory=list)


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Evaluate every grid point; results keep grid order for any worker count."""
    points = list(spec.points())
    tasks = [(spec.quantity, pt, spec.convention, spec.oracle) for pt in points]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_evaluate_point, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        out = [_evaluate_point(t) for t in tasks]
    return SweepResult(spec, points, [v for v, _ in out], [o for _, o in out] if spec.oracle else [])


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def format_csv(result: SweepResult) -> str:
    """Deterministic CSV text with a '#'-prefixed preamble."""
    spec = result.spec
    buf = io.StringIO()
    buf.write(f"# quantity: {spec.quantity} ({QUANTITIES[spec.quantity].description})\n")
    buf.write(f"# unit convention: {spec.convention.value} (beta*h = gap energy / k_B T with the gap read as "
              f"{'an angular' if spec.convention is UnitConvention.ANGULAR else 'a cyclic'} frequency)\n")
    buf.write("# units: T in mK, h and g in GHz\n")
    for note in spec.notes:
        buf.write(f"# {note}\n")
    fixed = dict(spec.fixed)
    fixed.setdefault("h", 1.0)
    cols = spec.axes + sorted(k for k in fixed if k not in spec.axes) + [spec.quantity]
    if spec.oracle:
        cols += ["oracle_value", "oracle_rel_error"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for i, pt in enumerate(result.points):
        row = [_fmt(pt[k]) for k in cols[: len(cols) - (3 if spec.oracle else 1)]]
        value = result.values[i]
        row.append(_fmt(value))
        if spec.oracle:
            ov = result.oracle_values[i]
            err = None
            if ov is not None and math.isfinite(ov) and math.isfinite(value):
                err = abs(value - ov) / abs(ov) if ov != 0 else abs(value)
            row += [_fmt(ov), _fmt(err)]
        w.writerow(row)
    return buf.getvalue()


# -- grid parsing and presets -------------------------------------------------


def parse_values(var: str, text: str) -> tuple:
    """``lo:hi:n`` (inclusive linspace) or a comma-separated list."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            n = int(n)
            if n < 1:
                raise DomainError(f"grid for {var} needs at least one point")
            vals = np.linspace(float(lo), float(hi), n).tolist() if n > 1 else [float(lo)]
        else:
            vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise DomainError(f"cannot parse values {text!r} for {var}") from exc
    if not vals:
        raise DomainError(f"grid for {var} is empty")
    if var in INTEGER_VARIABLES:
        if any(not float(v).is_integer() for v in vals):
            raise DomainError(f"{var} values must be integers, got {vals}")
        vals = [int(round(v)) for v in vals]
    return tuple(vals)


def parse_assignment(text: str) -> tuple:
    if "=" not in text:
        raise DomainError(f"expected var=value, got {text!r}")
    var, _, val = text.partition("=")
    var = var.strip()
    if var not in VARIABLES:
        raise DomainError(f"unknown variable {var!r}; choose from {VARIABLES}")
    return var, val


T_FIG_LIST = (5.0, 10.0, 20.0, 50.0, 100.0)
T_FINE = parse_values("T", "1:100:100")
G_FINE = parse_values("g", "-2:-0.02:100")
G_LIST = (-0.5, -1.0, -2.0)
N_RANGE = tuple(range(1, 31))
N_NOTE = "assumption: N axis 1..30 (not stated numerically for the source figure)"
T_NOTE = "assumption: temperature list 5, 10, 20, 50, 100 mK"


@dataclass(frozen=True)
class FigurePreset:
    name: str
    description: str
    quantity: str
    grid: tuple
    fixed: tuple
    notes: tuple = ()

    def spec(self, convention=UnitConvention.ANGULAR, oracle: bool = False) -> SweepSpec:
        return SweepSpec(self.quantity, self.grid, self.fixed, convention, oracle,
                         (f"figure preset: {self.name}", *self.notes))


def _vs_T(name, quantity, desc):
    return FigurePreset(name, desc, quantity, (("g", G_LIST), ("T", T_FINE)), (("N", 6), ("h", 1.0)),
                        ("assumption: T axis 1..100 mK, 100 points",))


def _vs_g(name, quantity, desc):
    return FigurePreset(name, desc, quantity, (("T", T_FIG_LIST), ("g", G_FINE)), (("N", 6), ("h", 1.0)),
                        (T_NOTE, "assumption: g axis -2..-0.02 GHz, 100 points"))


def _vs_N(name, quantity, desc):
    return FigurePreset(name, desc, quantity, (("T", T_FIG_LIST), ("N", N_RANGE)), (("g", -1.0), ("h", 1.0)),
                        (T_NOTE, N_NOTE))


FIGURES = {
    f.name: f
    for f in (
        _vs_T("fig2a", "teff_ratio", "central T_eff/T vs T for N=6, g in {-0.5,-1,-2} GHz"),
        _vs_N("fig2b", "teff_ratio", "central T_eff/T vs N for g=-h"),
        _vs_g("fig3a", "efficiency", "efficiency vs g for N=6"),
        _vs_N("fig3b", "efficiency", "efficiency vs N for g=-h"),
        _vs_g("fig5a", "teff_whole", "whole-star T_eff/T vs g for N=6"),
        _vs_N("fig5b", "teff_whole", "whole-star T_eff/T vs N for g=-h"),
        _vs_g("fig6a", "efficiency_whole", "whole-star efficiency vs g for N=6"),
        _vs_N("fig6b", "efficiency_whole", "whole-star efficiency vs N for g=-h"),
        _vs_g("fig7a", "teff_ancilla", "ancilla T_eff/T vs g for N=6"),
        _vs_N("fig7b", "teff_ancilla", "ancilla T_eff/T vs N for g=-h"),
        _vs_T("fig8", "heisenberg_teff", "Heisenberg central T_eff/T vs T for N=6"),
        _vs_T("fig9", "heisenberg_eff", "Heisenberg efficiency vs T for N=6"),
    )
}
