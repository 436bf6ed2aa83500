"""Command-line front end.

Commands: ``convergence``, ``surplus``, ``solve``, ``verify``, ``bounds``.
Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 solver failure.

Options can also come from a plain ``key = value`` file given with
``--config``; flags on the command line win.

The CSV ``rate`` column holds ``log2(e_n / e_{n+1})`` for pointwise errors and
the signed ratio ``e_n / e_{n+1}`` of consecutive increments in surplus mode.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import analysis as an
from .combination import ComponentSolveError, SolverHandle, combination_terms, combine
from .grid import CapacityError, DEFAULT_NODE_CAP, node_count
from .problems import (
    ProblemSpec,
    advection_profile,
    constant_poisson,
    gaussian_poisson,
    quadratic_poisson,
)
from .solvers import ConvergenceError, SolverConfig
from .verify import CHECK_NAMES, run_all

log = logging.getLogger("sgcombi")

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

PROBLEMS = ("poisson-gauss", "poisson-quadratic", "poisson-constant", "adv-diff")
CSV_COLUMNS = ("n", "dof", "error", "rate", "seconds", "bound")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str = "poisson-gauss"
    dim: int = 2
    lam: tuple[float, ...] | None = None
    center: tuple[float, ...] | None = None
    eps: float = 0.9
    k: int = 5
    nu: float = 0.1
    levels: tuple[int, int] = (2, 10)
    point: tuple[float, ...] | None = None
    mode: str = "pointwise"
    out: str | None = None
    summary: str | None = None
    workers: int = 1
    node_cap: int = DEFAULT_NODE_CAP
    tolerance: float = 1e-10
    max_iterations: int | None = None
    K: float | None = None
    fit_from: int = 4

    def validate(self) -> None:
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {', '.join(PROBLEMS)}")
        if self.problem == "adv-diff":
            self.dim = 3
        if not 1 <= self.dim <= 12:
            raise ConfigError(f"dimension must lie in 1..12, got {self.dim}")
        lo, hi = self.levels
        if lo < 0 or hi < lo:
            raise ConfigError(f"bad level range {lo}..{hi}")
        if self.mode not in ("pointwise", "surplus"):
            raise ConfigError(f"mode must be pointwise or surplus, got {self.mode!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 < self.tolerance < 1:
            raise ConfigError("tolerance must lie in (0, 1)")
        if self.node_cap <= 0:
            raise ConfigError("node_cap must be positive")
        if self.max_iterations is not None and self.max_iterations <= 0:
            raise ConfigError("max_iterations must be positive")
        for name, vec in (("lambda", self.lam), ("center", self.center)):
            if vec is not None and len(vec) != self.dim:
                raise ConfigError(f"{name} needs {self.dim} entries, got {len(vec)}")
        if self.point is not None:
            if len(self.point) != self.dim:
                raise ConfigError(f"point needs {self.dim} entries")
            if any(not 0 <= v <= 1 for v in self.point):
                raise ConfigError("point must lie in the unit cube")
        if not 0 <= self.eps <= 1:
            raise ConfigError("eps must lie in [0, 1]")
        if self.nu < 0:
            raise ConfigError("nu must be >= 0")

    def build_problem(self) -> ProblemSpec:
        if self.problem == "poisson-gauss":
            return gaussian_poisson(self.dim, self.lam, self.center)
        if self.problem == "poisson-quadratic":
            return quadratic_poisson(self.dim)
        if self.problem == "poisson-constant":
            return constant_poisson(self.dim)
        return advection_profile(self.eps, self.k, self.nu)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            rel_tolerance=self.tolerance, max_iterations=self.max_iterations, node_cap=self.node_cap
        )


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).replace(" ", "").split(",") if v)


def _level_range(text: str) -> tuple[int, int]:
    text = str(text).strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return int(lo), int(hi)
    n = int(text)
    return n, n


CONVERTERS = {
    "problem": str,
    "dim": int,
    "lam": _floats,
    "center": _floats,
    "eps": float,
    "k": int,
    "nu": float,
    "levels": _level_range,
    "point": _floats,
    "mode": str,
    "out": str,
    "summary": str,
    "workers": int,
    "node_cap": int,
    "tolerance": float,
    "max_iterations": int,
    "K": float,
    "fit_from": int,
}

ALIASES = {"lambda": "lam", "node-cap": "node_cap", "max-iterations": "max_iterations", "fit-from": "fit_from", "dimension": "dim", "d": "dim"}


def read_config_file(path: str | Path) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = ALIASES.get(key, key.replace("-", "_"))
        if key not in CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def make_run_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for key in CONVERTERS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    cfg = RunConfig()
    for key, raw in values.items():
        try:
            setattr(cfg, key, CONVERTERS[key](raw) if isinstance(raw, str) else raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
    cfg.validate()
    return cfg


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _bound_for(cfg: RunConfig, problem: ProblemSpec, n: int) -> float | None:
    K = cfg.K if cfg.K is not None else problem.deriv_sup
    if K is None:
        return None
    kind = "poisson" if problem.kind == "poisson" else "advection"
    return an.model_bound(kind, problem.dim, K, n)


def run_convergence(cfg: RunConfig, stdout=None) -> dict:
    stdout = stdout or sys.stdout
    problem = cfg.build_problem()
    handle = SolverHandle(problem, cfg.solver_config(), workers=cfg.workers)
    x_star = cfg.point or problem.center
    lo, hi = cfg.levels
    if cfg.mode == "pointwise":
        if problem.exact is None:
            raise ConfigError(f"problem {cfg.problem} has no exact solution; use --mode surplus")
        records = an.pointwise_errors(handle, problem.exact, x_star, range(lo, hi + 1))
    else:
        if hi <= lo:
            raise ConfigError("surplus mode needs at least two levels")
        records = an.surplus_errors(handle, x_star, range(lo, hi + 1))
    log_rates = an.convergence_rates(records) + [math.nan] if len(records) > 1 else [math.nan]
    # surplus tables report the signed increment ratio, pointwise tables the log2 order
    if cfg.mode == "surplus":
        rates = an.surplus_ratios(records) + [math.nan]
    else:
        rates = log_rates

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec, rate in zip(records, rates):
        writer.writerow(
            [rec.n, rec.dof, _fmt(rec.error), _fmt(rate), f"{rec.seconds:.6f}", _fmt(_bound_for(cfg, problem, rec.n))]
        )
    text = buf.getvalue()
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        stdout.write(text)

    window = [r for r in records if r.n >= max(cfg.fit_from, 1)]
    fits = {}
    for mode in ("by_level", "by_dof"):
        try:
            fits[mode] = an.fit_asymptote(window, mode).as_dict()
        except an.FitError as exc:
            fits[mode] = {"error": str(exc)}
    summary = {
        "problem": cfg.problem,
        "dim": problem.dim,
        "mode": cfg.mode,
        "point": list(x_star),
        "levels": [lo, hi],
        "fit_window": [r.n for r in window],
        "fits": fits,
        "log2_rates": [None if math.isnan(v) else v for v in log_rates[:-1]],
    }
    if cfg.mode == "surplus":
        summary["ratios"] = [None if math.isnan(v) else v for v in rates[:-1]]
    summary_path = cfg.summary or (str(Path(cfg.out).with_suffix(".json")) if cfg.out else None)
    if summary_path:
        Path(summary_path).write_text(json.dumps(summary, indent=2) + "\n")
    else:
        stdout.write(json.dumps(summary, indent=2) + "\n")
    return summary


def run_solve(cfg: RunConfig, stdout=None) -> Path | None:
    stdout = stdout or sys.stdout
    problem = cfg.build_problem()
    n = cfg.levels[1]
    plan = combination_terms(problem.dim, n)
    too_big = [lv for _, lv in plan if node_count(lv) > cfg.node_cap]
    if too_big:
        raise CapacityError(f"grid {too_big[0]} exceeds node cap {cfg.node_cap}")
    handle = SolverHandle(problem, cfg.solver_config(), workers=cfg.workers)
    start = time.perf_counter()
    cs = combine(handle, problem.dim, n)
    elapsed = time.perf_counter() - start
    out = Path(cfg.out or f"solve_{cfg.problem}_d{problem.dim}_n{n}")
    if len(cs.terms) == 1:
        out.mkdir(parents=True, exist_ok=True)
        target = out / ("grid_" + "_".join(map(str, cs.terms[0][1].levels)) + ".txt")
        cs.terms[0][1].save(target)
    else:
        target = cs.export(out)
    worst = max((getattr(r, "final_residual", 0.0) or 0.0) for r in handle.reports.values())
    plus = sum(1 for c, _ in cs.terms if c > 0)
    stdout.write(
        f"level {n}  d={problem.dim}  terms={len(cs.terms)} (+{plus}/-{len(cs.terms) - plus})  "
        f"dof={cs.dof}  max_residual={worst:.3e}  seconds={elapsed:.3f}\n"
    )
    if cs.truncated:
        stdout.write(f"note: level {n} < d-1, coefficients are truncated\n")
    stdout.write(f"wrote {target}\n")
    return target


def run_verify(args, stdout=None) -> int:
    stdout = stdout or sys.stdout
    results = run_all(max_dim=args.max_dim, max_level=args.max_level, seed=args.seed, inject=args.inject)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        stdout.write(f"{r.name:<{width}}  {status}  cases={r.cases:<5d} {r.seconds:7.3f}s  {r.detail}\n")
    failed = [r for r in results if not r.passed]
    if failed:
        stdout.write(f"first failing identity: {failed[0].name}\n")
        return EXIT_VERIFY
    stdout.write("all identities hold\n")
    return EXIT_OK


def run_bounds(args, stdout=None) -> None:
    stdout = stdout or sys.stdout
    lo, hi = _level_range(args.levels)
    dims = range(1, args.max_dim + 1)
    writer = csv.writer(stdout, lineterminator="\n")
    writer.writerow(["d", "n", "theoretical", "sharper", "leading"])
    for d in dims:
        bp = an.BoundParams(K=args.K, d=d, p=args.order, v_bar=args.v_bar)
        for n in range(lo, hi + 1):
            sharper = an.sharper_bound(bp, n) if d >= 2 else math.nan
            leading = an.leading_term(bp, n) if n >= 1 else math.nan
            writer.writerow([d, n, _fmt(an.theoretical_bound(bp, n)), _fmt(sharper), _fmt(leading)])


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--problem", choices=PROBLEMS)
    p.add_argument("--dim", type=int)
    p.add_argument("--lambda", dest="lam", type=_floats, help="comma-separated decay rates")
    p.add_argument("--center", type=_floats)
    p.add_argument("--eps", type=float, help="transition width of the profile")
    p.add_argument("--k", type=int, help="smoothness of the profile transition")
    p.add_argument("--nu", type=float, help="diffusivity")
    p.add_argument("--levels", type=_level_range, help="level range a..b")
    p.add_argument("--point", type=_floats, help="evaluation point (default: centre)")
    p.add_argument("--mode", choices=("pointwise", "surplus"))
    p.add_argument("--out")
    p.add_argument("--summary", help="path of the JSON summary")
    p.add_argument("--workers", type=int, help="parallel component solves")
    p.add_argument("--node-cap", dest="node_cap", type=int)
    p.add_argument("--tolerance", type=float, help="relative residual target (default 1e-10)")
    p.add_argument("--max-iterations", dest="max_iterations", type=int, help="CG budget per grid")
    p.add_argument("--K", type=float, help="derivative bound for the bound column")
    p.add_argument("--fit-from", dest="fit_from", type=int, help="first level of the fit window")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgcombi", description="Sparse-grid combination technique experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (
        ("convergence", "error table and asymptotic fits"),
        ("surplus", "same as convergence --mode surplus"),
        ("solve", "solve at one level and write the grid files"),
    ):
        _add_run_options(sub.add_parser(name, help=helptext))

    v = sub.add_parser("verify", help="run the combinatorial oracle suite")
    v.add_argument("--max-dim", type=int, default=8)
    v.add_argument("--max-level", type=int, default=30)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--inject", choices=CHECK_NAMES, help=argparse.SUPPRESS)

    b = sub.add_parser("bounds", help="tabulate the a-priori bounds")
    b.add_argument("--K", type=float, default=1.0)
    b.add_argument("--order", type=int, default=2)
    b.add_argument("--v-bar", dest="v_bar", type=float, default=1.0)
    b.add_argument("--max-dim", type=int, default=4)
    b.add_argument("--levels", default="0..10")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "verify":
            return run_verify(args)
        if args.command == "bounds":
            run_bounds(args)
            return EXIT_OK
        cfg = make_run_config(args)
        if args.command == "surplus":
            cfg.mode = "surplus"
        if args.command == "solve":
            run_solve(cfg)
        else:
            run_convergence(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ComponentSolveError, CapacityError, ConvergenceError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
