"""Oracle suite: every closed-form identity checked against brute force.

Each check returns a :class:`CheckResult`.  ``inject`` names a check whose
closed-form side gets a deliberate perturbation (negative control for the
suite itself).
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from . import combinatorics as cb
from .grid import GridFunction, enumerate_index_set, enumerate_level_set, make_grid
from .interp import interp_points, trapezoidal_integral


@dataclass
class CheckResult:
    name: str
    passed: bool
    cases: int
    detail: str = ""
    seconds: float = 0.0


def _bump(name: str, inject: str | None):
    return (lambda v: v + Fraction(1, 10**9)) if inject == name else (lambda v: v)


def check_consistency(max_dim: int = 8, max_level: int = 30, inject: str | None = None) -> CheckResult:
    """``delta^{d-1} N(n, d) = 1`` for ``n >= d - 1`` (truncated differences)."""
    bump = _bump("consistency", inject)
    cases = 0
    for d in range(1, max_dim + 1):
        seq = [cb.grids_on_level(n, d) for n in range(max_level + 1)]
        out = cb.iterated_diff(seq, d - 1, cb.DifferenceKind.BACKWARD)
        for n in range(d - 1, max_level + 1):
            cases += 1
            if bump(out[n]) != 1:
                return CheckResult("consistency", False, cases, f"d={d}, n={n}: got {out[n]}")
    return CheckResult("consistency", True, cases)


def check_coefficients(max_dim: int = 8, max_level: int = 30, inject: str | None = None) -> CheckResult:
    bump = _bump("coefficients", inject)
    cases = 0
    for d in range(1, max_dim + 1):
        c = cb.combination_coefficients(d)
        cases += 1
        if d >= 2 and sum(c) != 0:
            return CheckResult("coefficients", False, cases, f"d={d}: coefficients sum to {sum(c)}")
        for n in range(max_level + 1):
            cases += 1
            tc = cb.truncated_coefficients(d, n)
            total = bump(sum(cj * cb.grids_on_level(n - j, d) for j, cj in enumerate(tc)))
            if total != 1:
                return CheckResult("coefficients", False, cases, f"d={d}, n={n}: sum {total}")
            if n >= d - 1 and tc != c:
                return CheckResult("coefficients", False, cases, f"d={d}, n={n}: {tc} != {c}")
    return CheckResult("coefficients", True, cases)


def check_level_sets(inject: str | None = None) -> CheckResult:
    bump = _bump("level-set-count", inject)
    cases = 0
    for d in range(1, 7):
        for level in range(13):
            cases += 1
            vecs = enumerate_level_set(d, level)
            if bump(len(vecs)) != cb.grids_on_level(level, d) or len(set(vecs)) != len(vecs):
                return CheckResult("level-set-count", False, cases, f"d={d}, l={level}")
            if vecs != sorted(vecs):
                return CheckResult("level-set-count", False, cases, f"d={d}, l={level}: not sorted")
    for d in range(1, 5):
        for level in range(9):
            cases += 1
            if cb.grids_on_level(level, d) != cb.grids_on_level_brute(level, d):
                return CheckResult("level-set-count", False, cases, f"brute d={d}, l={level}")
        cases += 1
        n = 4
        if len(enumerate_index_set(d, n)) != sum(cb.grids_on_level(l, d) for l in range(n + 1)):
            return CheckResult("level-set-count", False, cases, f"index set d={d}")
    return CheckResult("level-set-count", True, cases)


def check_leibniz(seed: int = 0, trials: int = 20, inject: str | None = None) -> CheckResult:
    rng = random.Random(seed)
    bump = _bump("leibniz", inject)
    cases = 0
    for _ in range(trials):
        f = [rng.randint(-50, 50) for _ in range(12)]
        g = [rng.randint(-50, 50) for _ in range(12)]
        for k in range(7):
            for n in range(12 - k):
                cases += 1
                lhs = cb.discrete_leibniz_brute(f, g, k, n)
                rhs = bump(cb.discrete_leibniz_rhs(f, g, k, n))
                if lhs != rhs:
                    return CheckResult("leibniz", False, cases, f"k={k}, n={n}: {lhs} != {rhs}")
    return CheckResult("leibniz", True, cases)


def _random_fractions(rng: random.Random, length: int) -> list[Fraction]:
    return [Fraction(rng.randint(-20, 20), rng.randint(1, 9)) for _ in range(length)]


def check_differencing(seed: int = 0, max_dim: int = 5, inject: str | None = None) -> CheckResult:
    rng = random.Random(seed + 1)
    bump = _bump("differencing", inject)
    cases = 0
    for d in range(1, max_dim + 1):
        f = _random_fractions(rng, 6 + d + 2)
        for k in range(d):
            for n in range(7):
                cases += 1
                g_part, h_part = cb.differencing_parts(f, d, k, n)
                if bump(g_part + h_part) != cb.differencing_brute(f, d, k, n):
                    return CheckResult("differencing", False, cases, f"d={d}, k={k}, n={n}")
    return CheckResult("differencing", True, cases)


def check_differencing_full(seed: int = 0, max_dim: int = 5, inject: str | None = None) -> CheckResult:
    rng = random.Random(seed + 2)
    bump = _bump("differencing-full", inject)
    cases = 0
    for d in range(1, max_dim + 1):
        f = _random_fractions(rng, 6 + d + 1)
        for n in range(7):
            cases += 1
            if bump(cb.full_difference(f, d, n)) != cb.differencing_brute(f, d, d, n):
                return CheckResult("differencing-full", False, cases, f"d={d}, n={n}")
    return CheckResult("differencing-full", True, cases)


def check_error_representation(
    seed: int = 0, max_dim: int = 4, max_level: int = 8, rtol: float = 1e-12, inject: str | None = None
) -> CheckResult:
    """Closed form (float) against exact simplex enumeration."""
    rng = random.Random(seed + 3)
    cases = 0
    worst = 0.0
    for d in range(1, max_dim + 1):
        for m in range(1, d + 1):
            for p in (1, 2):
                table: dict = {}

                def v(i, table=table):
                    if i not in table:
                        table[i] = Fraction(rng.randint(-30, 30), rng.randint(1, 7))
                    return table[i]

                s_exact = cb.surplus_sums(v, m, max_level + d)
                s_float = [float(x) for x in s_exact]
                for n in range(max_level + 1):
                    cases += 1
                    brute = cb.error_rep_brute(v, d, m, p, n)
                    closed = cb.error_rep_rhs(s_float, d, m, p, n)
                    if inject == "err-rep":
                        closed *= 1.0 + 1e-9
                    if cb.error_rep_rhs(s_exact, d, m, p, n) != brute and inject != "err-rep":
                        return CheckResult("err-rep", False, cases, f"exact mismatch d={d}, m={m}, p={p}, n={n}")
                    scale = abs(float(brute))
                    err = abs(closed - float(brute))
                    rel = err / scale if scale > 0 else err
                    worst = max(worst, rel)
                    if rel > rtol:
                        return CheckResult(
                            "err-rep", False, cases, f"d={d}, m={m}, p={p}, n={n}: relative error {rel:.2e}"
                        )
    return CheckResult("err-rep", True, cases, f"max relative error {worst:.1e}")


def check_interpolation(seed: int = 0, inject: str | None = None) -> CheckResult:
    """Multilinear data is reproduced; trapezoid equals the cellwise integral."""
    rng = np.random.default_rng(seed)
    cases = 0
    for levels in [(2,), (1, 3), (2, 1, 2)]:
        d = len(levels)
        a = rng.uniform(-1, 1, d)
        b = rng.uniform(-1, 1, d)

        def f(x, a=a, b=b):
            out = 1.0
            for k, xk in enumerate(x):
                out = out * (a[k] + b[k] * np.asarray(xk))
            return out

        grid = make_grid(levels)
        values = np.broadcast_to(f(grid.coordinates()), grid.shape)
        gf = GridFunction(grid, values)
        pts = rng.uniform(0, 1, (64, d))
        approx = interp_points(gf, pts)
        if inject == "interp-exact":
            approx = approx + 1e-9
        exact = f(list(pts.T))
        cases += 1
        if np.max(np.abs(approx - exact)) > 1e-14:
            return CheckResult("interp-exact", False, cases, f"levels {levels}")

        rand = GridFunction(grid, rng.uniform(-1, 1, grid.shape))
        cases += 1
        if abs(trapezoidal_integral(rand) - _cellwise_integral(rand)) > 1e-13 * max(1.0, abs(_cellwise_integral(rand))):
            return CheckResult("interp-exact", False, cases, f"cubature on {levels}")
    return CheckResult("interp-exact", True, cases)


def _cellwise_integral(gf: GridFunction) -> float:
    """Exact integral of the multilinear interpolant: corner mean times cell volume, per cell."""
    vals = gf.values
    d = vals.ndim
    vol = float(np.prod(gf.grid.spacing))
    total = 0.0
    cell_ranges = [range(n - 1) for n in vals.shape]
    for cell in product(*cell_ranges):
        acc = 0.0
        for corner in product((0, 1), repeat=d):
            acc += vals[tuple(c + o for c, o in zip(cell, corner))]
        total += acc / 2**d * vol
    return total


CHECK_NAMES = (
    "consistency",
    "coefficients",
    "level-set-count",
    "leibniz",
    "differencing",
    "differencing-full",
    "err-rep",
    "interp-exact",
)


def run_all(max_dim: int = 8, max_level: int = 30, seed: int = 0, inject: str | None = None) -> list[CheckResult]:
    if inject is not None and inject not in CHECK_NAMES:
        raise ValueError(f"unknown check {inject!r}")
    plan = [
        lambda: check_consistency(max_dim, max_level, inject),
        lambda: check_coefficients(max_dim, max_level, inject),
        lambda: check_level_sets(inject),
        lambda: check_leibniz(seed, inject=inject),
        lambda: check_differencing(seed, inject=inject),
        lambda: check_differencing_full(seed, inject=inject),
        lambda: check_error_representation(seed, inject=inject),
        lambda: check_interpolation(seed, inject=inject),
    ]
    results = []
    for step in plan:
        start = time.perf_counter()
        res = step()
        res.seconds = time.perf_counter() - start
        results.append(res)
    return results
