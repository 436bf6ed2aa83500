"""Convergence measurement, rate tables, asymptotic fits and a-priori bounds."""

from __future__ import annotations

import math
import time
import warnings
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .combination import SolverHandle, combination_terms
from .grid import node_count

# prefactors of the model-problem bounds (constants as published)
POISSON_BOUND_C = 121000.0
POISSON_EXPANSION_C = 150188.0
ADVECTION_BOUND_C = 2.0
ADVECTION_EXPANSION_C = 1.5


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class ConvergenceRecord:
    n: int
    error: float
    dof: int
    seconds: float = 0.0
    value: float = math.nan
    signed: float = math.nan


@dataclass(frozen=True)
class FitResult:
    """Parameters of ``log2(err) ~ -r + q log2(x) - p x`` (``x = n`` or ``log2 dof``)."""

    p: float
    q: float
    r: float
    residual_norm: float
    mode: str = "by_level"
    count: int = 0

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "r": self.r,
            "residual_norm": self.residual_norm,
            "mode": self.mode,
            "count": self.count,
        }


@dataclass(frozen=True)
class BoundParams:
    K: float
    d: int
    p: int = 2
    v_bar: float | None = None

    def __post_init__(self):
        if self.K < 0 or self.d < 1 or self.p < 1:
            raise ValueError(f"invalid bound parameters {self}")


def _combined_values(solver: SolverHandle, x_star, levels: Iterable[int]):
    """``(n, u_n(x*), dof, seconds)``; same term order and sum as ``evaluate(combine(...))``."""
    d = solver.dim
    for n in levels:
        start = time.perf_counter()
        plan = combination_terms(d, n)
        values = solver.values_at((lv for _, lv in plan), x_star)
        total = 0.0
        for coef, lv in plan:
            total += coef * values[lv]
        dof = sum(node_count(lv) for _, lv in plan)
        yield n, total, dof, time.perf_counter() - start


def pointwise_errors(solver: SolverHandle, exact: Callable, x_star, levels: Iterable[int]) -> list[ConvergenceRecord]:
    """``|u(x*) - u_n(x*)|`` for each level ``n``."""
    levels = list(levels)
    if not levels:
        raise ValueError("empty level range")
    target = float(np.asarray(exact([float(v) for v in x_star])))
    return [
        ConvergenceRecord(n, abs(target - value), dof, secs, value, target - value)
        for n, value, dof, secs in _combined_values(solver, x_star, levels)
    ]


def surplus_errors(solver: SolverHandle, x_star, levels: Iterable[int]) -> list[ConvergenceRecord]:
    """``|u_{n+1}(x*) - u_n(x*)|`` for each ``n`` in ``levels``.

    The record at ``n`` carries the dof count and timing of level ``n + 1``.
    """
    levels = sorted(set(levels))
    if len(levels) < 2:
        raise ValueError("surplus errors need at least two levels")
    needed = sorted(set(levels) | {n + 1 for n in levels})
    values = {n: (v, dof, secs) for n, v, dof, secs in _combined_values(solver, x_star, needed)}
    out = []
    for n in levels:
        v0 = values[n][0]
        v1, dof, secs = values[n + 1]
        out.append(ConvergenceRecord(n, abs(v1 - v0), dof, secs, v1, v1 - v0))
    return out


def convergence_rates(records: Sequence) -> list[float]:
    """``log2(e_n / e_{n+1})`` for consecutive records; ``nan`` where undefined."""
    errors = [r.error if isinstance(r, ConvergenceRecord) else float(r) for r in records]
    if len(errors) < 2:
        raise ValueError("need at least two errors for a rate")
    rates = []
    for a, b in zip(errors, errors[1:]):
        if a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b):
            rates.append(math.log2(a / b))
        else:
            rates.append(math.nan)
    return rates


def surplus_ratios(records: Sequence[ConvergenceRecord]) -> list[float]:
    """Signed ratios ``(u_{n+1} - u_n) / (u_{n+2} - u_{n+1})`` of consecutive increments.

    Tends to ``2^p`` for an order-``p`` scheme (up to log factors); a negative
    entry marks a sign change of the increment.
    """
    if len(records) < 2:
        raise ValueError("need at least two records for a ratio")
    out = []
    for a, b in zip(records, records[1:]):
        out.append(a.signed / b.signed if b.signed != 0 else math.nan)
    return out


def fit_asymptote(records: Sequence[ConvergenceRecord], mode: str = "by_level") -> FitResult:
    """Least-squares fit of ``-r + q log2(x) - p x`` to ``log2(error)``."""
    if mode not in ("by_level", "by_dof"):
        raise ValueError(f"unknown fit mode {mode!r}")
    usable = []
    for rec in records:
        if rec.n < 1:
            warnings.warn(f"skipping level {rec.n}: log2 undefined", stacklevel=2)
            continue
        if not rec.error > 0:
            warnings.warn(f"skipping level {rec.n}: error {rec.error} not positive", stacklevel=2)
            continue
        usable.append(rec)
    if len(usable) < 3:
        raise FitError(f"need >= 3 usable records, have {len(usable)}")
    if mode == "by_level":
        x = np.array([float(r.n) for r in usable])
    else:
        x = np.log2(np.array([float(r.dof) for r in usable]))
    y = np.log2(np.array([r.error for r in usable]))
    design = np.column_stack([-np.ones_like(x), np.log2(x), -x])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3:
        raise FitError("rank-deficient design matrix")
    r, q, p = (float(c) for c in coef)
    residual = float(np.linalg.norm(design @ coef - y))
    return FitResult(p=p, q=q, r=r, residual_norm=residual, mode=mode, count=len(usable))


def model_curve(fit: FitResult, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return -fit.r + fit.q * np.log2(x) - fit.p * x


def normalized_errors(records: Sequence[ConvergenceRecord], d: int, p: int = 2) -> list[float]:
    """``e_n 2^{pn} / n^{d-1}``, which stays bounded for the combination technique."""
    return [r.error * 2.0 ** (p * r.n) / float(r.n) ** (d - 1) for r in records]


def _factorial(k: int) -> float:
    out = 1.0
    for j in range(2, k + 1):
        out *= j
    return out


def theoretical_bound(bp: BoundParams, n: int) -> float:
    d, p = bp.d, bp.p
    base = (2.0**p + 1.0) / 2.0 ** (p - 1)
    return 2.0 * bp.K / _factorial(d - 1) * base ** (d - 1) * float(n + 2 * (d - 1)) ** (d - 1) * 2.0 ** (-p * n)


def sharper_bound(bp: BoundParams, n: int) -> float:
    d, p = bp.d, bp.p
    if d < 2:
        raise ValueError("the sharper bound needs d >= 2")
    base = (2.0**p + 1.0) / 2.0 ** (p - 1)
    growth = 1.0 + (n + d - 1) * (1.0 + math.log(d - 1)) / (d - 1)
    return 2.0 * bp.K * base ** (d - 1) * growth ** (d - 1) * 2.0 ** (-p * n)


def leading_term(bp: BoundParams, n: int) -> float:
    """Asymptotic error ``v_bar ((2^p-1)/2^p)^{d-1} n^{d-1}/(d-1)! 2^{-pn}``."""
    if bp.v_bar is None:
        raise ValueError("leading term needs v_bar")
    if n < 1:
        raise ValueError("leading term needs n >= 1")
    d, p = bp.d, bp.p
    ratio = (2.0**p - 1.0) / 2.0**p
    return bp.v_bar * ratio ** (d - 1) * float(n) ** (d - 1) / _factorial(d - 1) * 2.0 ** (-p * n)


def model_bound_constants(kind: str, d: int, deriv_sup: float, c: float | None = None) -> tuple[float, float]:
    """``(bound prefactor, leading-term prefactor)`` for the Poisson or transport model problem.

    The full bound is ``prefactor * (n + 2(d-1))^{d-1} * 2^{-pn}`` and the
    leading term ``prefactor * n^{d-1} * 2^{-pn}``, with ``p = 2`` (Poisson)
    or ``p = 1`` (transport); see :func:`model_bound`.
    """
    if kind == "poisson":
        c = POISSON_BOUND_C if c is None else c
        return c * deriv_sup * d * 2.5**d, c * deriv_sup * d / 4.0 ** (3 * d)
    if kind == "advection":
        c = ADVECTION_BOUND_C if c is None else c
        return c * deriv_sup * d * 0.75**d, c * deriv_sup * d / 4.0**d
    raise ValueError(f"unknown model problem {kind!r}")


def model_order(kind: str) -> int:
    return {"poisson": 2, "advection": 1}[kind]


def model_bound(kind: str, d: int, deriv_sup: float, n: int, c: float | None = None) -> float:
    prefactor, _ = model_bound_constants(kind, d, deriv_sup, c)
    p = model_order(kind)
    return prefactor * float(n + 2 * (d - 1)) ** (d - 1) * 2.0 ** (-p * n)


def model_leading(kind: str, d: int, deriv_sup: float, n: int, c: float | None = None) -> float:
    _, prefactor = model_bound_constants(kind, d, deriv_sup, c)
    p = model_order(kind)
    return prefactor * float(n) ** (d - 1) * 2.0 ** (-p * n)
