"""Command-line front end: sweeps, collision runs, self-test.

Exit codes: 0 success, 1 invalid input, 2 resource ceiling, 3 self-test failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import collision, sweep
from .core import (DomainError, ResourceLimitError, SpinStarError, UnitConvention, beta_from_temperature,
                   temperature_from_beta)
from .selftest import run_selftest

log = logging.getLogger("spinstar")

EXIT_OK, EXIT_VALIDATION, EXIT_RESOURCE, EXIT_SELFTEST = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    """Defaults read from a flat JSON object; every key is optional.

    Sweep defaults: h, N, g (GHz), T_mK, T_grid ("lo:hi:n" in mK).
    Collision run: gaps, J (GHz), T_mK (environment), T_eff_mK (refrigerant
    target), N (ancillas per refrigerant), rate and env_rate (1/ns; env_rate 0
    disables the environment), t_final, dt (ns), sample_every, initial
    ("environment" starts from Gibbs at T_mK, "target" from Gibbs at T_eff_mK).
    """

    h: float = 1.0
    N: int = 6
    g: float = -1.0
    T_mK: float = 20.0
    T_grid: str = "1:100:100"
    gaps: tuple = (1.0, 1.5)
    J: float = 0.25
    T_eff_mK: float = 10.0
    rate: float = 1.0
    env_rate: float = 0.0
    t_final: float = 40.0
    dt: float = 0.01
    sample_every: int = 10
    initial: str = "environment"
    convention: str = "angular"
    out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "gaps", tuple(float(v) for v in self.gaps))
        UnitConvention(self.convention)
        if self.initial not in ("environment", "target"):
            raise DomainError(f"initial must be 'environment' or 'target', got {self.initial!r}")
        for name in ("rate", "env_rate"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")
        if self.sample_every < 1:
            raise DomainError("sample_every must be at least 1")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["gaps"] = list(self.gaps)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(fields))
        if unknown:
            raise DomainError(f"unknown config keys {unknown}; allowed: {sorted(fields)}")
        kwargs = {}
        for key, value in data.items():
            if key == "N" or key == "sample_every":
                if isinstance(value, bool) or not float(value).is_integer():
                    raise DomainError(f"{key} must be an integer, got {value!r}")
                value = int(value)
            elif key in ("gaps",):
                value = tuple(value)
            elif key in ("T_grid", "initial", "convention"):
                value = str(value)
            elif key == "out":
                value = None if value is None else str(value)
            else:
                value = float(value)
            kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise DomainError("config must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise DomainError(f"cannot read config {path}: {exc}") from exc
        return cls.from_json(text)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise DomainError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spinstar", description="Spin-star quantum refrigerator simulator.")
    parser.add_argument("--list-figures", action="store_true", help="list figure presets and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    sw = sub.add_parser("sweep", help="evaluate a quantity on a parameter grid and write CSV")
    sw.add_argument("--quantity", choices=sorted(sweep.QUANTITIES))
    sw.add_argument("--grid", action="append", default=[], metavar="VAR=lo:hi:n|v1,v2,...",
                    help="grid axis over T (mK), g (GHz), r (g/h), N or h; repeatable")
    sw.add_argument("--fix", action="append", default=[], metavar="VAR=value")
    sw.add_argument("--figure", choices=sorted(sweep.FIGURES), help="use a figure preset")
    sw.add_argument("--convention", choices=[c.value for c in UnitConvention])
    sw.add_argument("--oracle", action="store_true", help="add enumeration cross-check columns (N <= 12)")
    sw.add_argument("--config", help="JSON file with default parameters")
    sw.add_argument("--out", help="output CSV path (default: stdout)")

    co = sub.add_parser("collide", help="cool a two-level Ising target with spin-star refrigerants")
    co.add_argument("--config", help="JSON run configuration")
    co.add_argument("--out", help="trajectory CSV path (summary goes next to it as .json)")
    co.add_argument("--convention", choices=[c.value for c in UnitConvention])

    st = sub.add_parser("selftest", help="check closed forms against oracles at pinned parameters")
    st.add_argument("--inject-beta-eff-error", type=float, default=0.0, metavar="REL",
                    help=argparse.SUPPRESS)
    return parser


def _list_figures(stream) -> None:
    for name, fig in sweep.FIGURES.items():
        axes = " x ".join(f"{k}[{len(v)}]" for k, v in fig.grid)
        fixed = ", ".join(f"{k}={v}" for k, v in fig.fixed)
        stream.write(f"{name}\t{fig.quantity}\t{axes}\t{fixed}\t{fig.description}\n")


def sweep_spec_from_args(args) -> sweep.SweepSpec:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    convention = UnitConvention(args.convention or cfg.convention)
    if args.figure:
        if args.grid or args.fix or (args.quantity and args.quantity != sweep.FIGURES[args.figure].quantity):
            raise DomainError("--figure fixes quantity, grid and parameters; do not combine it with them")
        return sweep.FIGURES[args.figure].spec(convention, args.oracle)
    if not args.quantity:
        raise DomainError("sweep needs --quantity or --figure")
    grid = []
    for item in args.grid or [f"T={cfg.T_grid}"]:
        var, text = sweep.parse_assignment(item)
        grid.append((var, sweep.parse_values(var, text)))
    fixed = {}
    for item in args.fix:
        var, text = sweep.parse_assignment(item)
        values = sweep.parse_values(var, text)
        if len(values) != 1:
            raise DomainError(f"--fix {item!r} must give a single value")
        fixed[var] = values[0]
    taken = {k for k, _ in grid} | set(fixed)
    defaults = {"h": cfg.h, "N": cfg.N, "T": cfg.T_mK}
    if not taken & {"g", "r"}:
        defaults["g"] = cfg.g
    for k, v in defaults.items():
        if k not in taken:
            fixed[k] = v
    return sweep.SweepSpec(args.quantity, tuple(grid), tuple(fixed.items()), convention, args.oracle)


def cmd_sweep(spec: sweep.SweepSpec, out: str | None) -> None:
    if sweep.QUANTITIES[spec.quantity].dense:
        for pt in spec.points():
            n = int(pt["N"])
            if n > sweep.oracle.MAX_DENSE_N:
                raise ResourceLimitError(
                    f"{spec.quantity} needs dense diagonalization; N = {n} exceeds {sweep.oracle.MAX_DENSE_N}"
                )
    text = sweep.format_csv(sweep.run_sweep(spec))
    if out:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _temperature(beta: float, convention: UnitConvention) -> float:
    if beta == math.inf:
        return 0.0
    if not beta > 0:
        return math.inf
    return temperature_from_beta(beta, convention)


def cmd_collide(cfg: RunConfig, out: str | None) -> dict:
    """Run the refrigerated collision model; returns the summary dictionary."""
    convention = UnitConvention(cfg.convention)
    model = collision.TargetIsingModel(cfg.gaps, cfg.J)
    beta = beta_from_temperature(cfg.T_mK, convention)
    beta_eff = beta_from_temperature(cfg.T_eff_mK, convention)
    refrigerants = collision.refrigerant_baths(model, beta, beta_eff, cfg.N, cfg.rate)
    baths = [r.bath for r in refrigerants]
    if cfg.env_rate > 0:
        baths += collision.environment_baths(model, beta, cfg.env_rate)
    L = collision.build_liouvillian(model, baths)
    target = collision.gibbs_state(model, beta_eff)
    rho0 = collision.gibbs_state(model, beta if cfg.initial == "environment" else beta_eff)
    traj = collision.evolve(rho0, L, cfg.t_final, cfg.dt, cfg.sample_every)
    steady = collision.steady_state(L)

    if out:
        collision.write_trajectory_csv(out, traj, model, target, lambda b: _temperature(b, convention))
    summary = {
        "convention": convention.value,
        "gaps_GHz": list(model.gaps),
        "J_GHz": model.J,
        "environment_temperature_mK": cfg.T_mK,
        "target_temperature_mK": cfg.T_eff_mK,
        "ancillas_per_refrigerant": cfg.N,
        "environment_baths": cfg.env_rate > 0,
        "refrigerants": [
            {"qubit": r.transition.qubit, "omega_GHz": r.transition.omega, "h_GHz": r.h, "g_GHz": r.g,
             "p_ground": r.bath.p_g, "p_excited": r.bath.p_e}
            for r in refrigerants
        ],
        "final_time_ns": float(traj.times[-1]),
        "final_effective_temperature_mK": _temperature(collision.effective_beta(model, traj.final), convention),
        "steady_state_effective_temperature_mK": _temperature(collision.effective_beta(model, steady), convention),
        "final_fidelity_to_target_gibbs": collision.fidelity(traj.final, target),
        "steady_state_fidelity_to_target_gibbs": collision.fidelity(steady, target),
        "final_trace_distance_to_steady_state": collision.trace_distance(traj.final, steady),
        "max_trace_drift": traj.max_trace_drift,
        "step_halving_error": traj.halving_error,
    }
    if out:
        Path(out).with_suffix(".json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def cmd_selftest(stream, beta_eff_perturbation: float = 0.0) -> bool:
    t0 = time.perf_counter()
    results = run_selftest(beta_eff_perturbation)
    for r in results:
        stream.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<30s} {r.seconds:7.3f}s  {r.detail}\n")
    ok = all(r.passed for r in results)
    stream.write(f"{sum(r.passed for r in results)}/{len(results)} checks passed "
                 f"in {time.perf_counter() - t0:.2f}s\n")
    return ok


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.list_figures:
            _list_figures(sys.stdout)
            return EXIT_OK
        if args.command == "sweep":
            cmd_sweep(sweep_spec_from_args(args), args.out)
        elif args.command == "collide":
            cfg = RunConfig.load(args.config) if args.config else RunConfig()
            if args.convention:
                cfg = dataclasses.replace(cfg, convention=args.convention)
            summary = cmd_collide(cfg, args.out or cfg.out)
            sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        elif args.command == "selftest":
            return EXIT_OK if cmd_selftest(sys.stdout, args.inject_beta_eff_error) else EXIT_SELFTEST
        else:
            build_parser().print_help(sys.stderr)
            return EXIT_VALIDATION
    except ResourceLimitError as exc:
        sys.stderr.write(f"spinstar: resource limit: {exc}\n")
        return EXIT_RESOURCE
    except (SpinStarError, ValueError) as exc:
        sys.stderr.write(f"spinstar: error: {exc}\n")
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
