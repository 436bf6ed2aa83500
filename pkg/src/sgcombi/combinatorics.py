"""Difference operators on sequences and the combinatorial identities behind
the combination technique.

Sequences are plain Python lists indexed from ``n = 0``.  Entries may be
``int``, ``Fraction`` or ``float``; all operations keep the arithmetic type of
the input, so integer and rational inputs give bit-exact results.  Binomial
coefficients come from :func:`math.comb` (exact integers).

Every closed form here has a brute-force counterpart (the ``*_brute``
functions) that the verification suite checks it against.
"""

from __future__ import annotations

import enum
from collections.abc import Callable, Sequence
from fractions import Fraction
from itertools import product
from math import comb

INT64_MAX = 2**63 - 1


class DifferenceKind(str, enum.Enum):
    """Forward ``f(n+1) - f(n)`` or backward with truncation at ``n = 0``."""

    FORWARD = "forward"
    BACKWARD = "backward"


def binom(n: int, k: int) -> int:
    """Exact binomial coefficient, zero outside ``0 <= k <= n``."""
    if n < 0:
        raise ValueError(f"binomial with negative top index {n}")
    if k < 0 or k > n:
        return 0
    return comb(n, k)


def diff(seq: Sequence, kind: DifferenceKind | str = DifferenceKind.BACKWARD) -> list:
    """One application of the difference operator.

    The backward form keeps the length (``out[0] = seq[0]``); the forward form
    drops the last entry.
    """
    kind = DifferenceKind(kind)
    if len(seq) == 0:
        raise ValueError("difference of an empty sequence")
    if kind is DifferenceKind.BACKWARD:
        return [seq[0]] + [seq[j] - seq[j - 1] for j in range(1, len(seq))]
    return [seq[j + 1] - seq[j] for j in range(len(seq) - 1)]


def iterated_diff(seq: Sequence, k: int, kind: DifferenceKind | str = DifferenceKind.BACKWARD) -> list:
    if k < 0:
        raise ValueError(f"difference count must be >= 0, got {k}")
    kind = DifferenceKind(kind)
    if kind is DifferenceKind.FORWARD and k >= len(seq):
        raise ValueError(f"{k}-fold forward difference of a length-{len(seq)} sequence is empty")
    out = list(seq)
    for _ in range(k):
        out = diff(out, kind)
    return out


def forward_diff_at(seq: Sequence, k: int, n: int):
    """``(delta^k seq)(n)`` for the forward difference."""
    if n + k >= len(seq):
        raise IndexError(f"need seq[{n + k}], have {len(seq)} entries")
    return iterated_diff(seq[n : n + k + 1], k, DifferenceKind.FORWARD)[0]


def grids_on_level(n: int, d: int) -> int:
    """Number of level vectors ``i`` in ``N_0^d`` with ``|i| = n``."""
    if n < 0 or d < 1:
        raise ValueError(f"need n >= 0 and d >= 1, got n={n}, d={d}")
    value = binom(n + d - 1, d - 1)
    if value > INT64_MAX:
        raise OverflowError(f"N({n},{d}) exceeds the 64-bit integer range")
    return value


def grids_on_level_brute(n: int, d: int) -> int:
    return sum(1 for i in product(range(n + 1), repeat=d) if sum(i) == n)


def combination_coefficients(d: int) -> list[int]:
    """Coefficients ``c_j`` of ``S(n - j)``, ``j = 0..d-1``, in the combined solution."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return [(-1) ** j * binom(d - 1, j) for j in range(d)]


def truncated_coefficients(d: int, n: int) -> list[int]:
    """Coefficients of ``S(n - j)`` for ``j = 0..min(n, d-1)``.

    Obtained by applying the truncated backward difference ``d - 1`` times to
    unit sequences, so levels ``n < d - 1`` are handled the same way as the
    regular case.  For ``n >= d - 1`` this equals :func:`combination_coefficients`.
    """
    if n < 0:
        raise ValueError(f"level must be >= 0, got {n}")
    out = []
    for j in range(min(n, d - 1) + 1):
        unit = [0] * (n + 1)
        unit[n - j] = 1
        out.append(iterated_diff(unit, d - 1, DifferenceKind.BACKWARD)[n])
    return out


def discrete_leibniz_rhs(f: Sequence, g: Sequence, k: int, n: int):
    """Right-hand side of the discrete product rule for ``delta^k (f g)(n)``.

    ``sum_j C(k, j) (delta^{k-j} f)(n + j) (delta^j g)(n)`` with forward
    differences.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if len(f) <= n + k or len(g) <= n + k:
        raise IndexError(f"sequences must reach index {n + k}")
    total = 0
    for j in range(k + 1):
        total += binom(k, j) * forward_diff_at(f, k - j, n + j) * forward_diff_at(g, j, n)
    return total


def discrete_leibniz_brute(f: Sequence, g: Sequence, k: int, n: int):
    prod = [a * b for a, b in zip(f, g)]
    return forward_diff_at(prod, k, n)


def binomial_convolution(f: Sequence, d: int, n: int):
    """``F(n) = sum_{l <= n} f(l) C(n - l + d - 1, d - 1)``."""
    return sum(f[l] * binom(n - l + d - 1, d - 1) for l in range(n + 1))


def differencing_parts(f: Sequence, d: int, k: int, n: int) -> tuple:
    """Split ``delta^k F(n)`` into the boundary part ``G`` and bulk part ``H``.

    ``F`` is the binomial convolution of ``f`` (see
    :func:`binomial_convolution`).  Valid for ``0 <= k < d``; for ``k = d``
    use :func:`full_difference`.
    """
    if not 0 <= k < d:
        raise ValueError(f"need 0 <= k < d, got k={k}, d={d}")
    if len(f) <= n + k:
        raise IndexError(f"f must reach index {n + k}")
    g_part = 0
    for j in range(1, k + 1):
        g_part += f[n + j] * binom(d - j - 1, k - j)
    h_part = sum(f[l] * binom(n - l + d - 1, d - k - 1) for l in range(n + 1))
    return g_part, h_part


def full_difference(f: Sequence, d: int, n: int):
    """``delta^d F(n)``, which collapses to ``f(n + d)``."""
    if len(f) <= n + d:
        raise IndexError(f"f must reach index {n + d}")
    return f[n + d]


def differencing_brute(f: Sequence, d: int, k: int, n: int):
    """``delta^k F(n)`` by forward-differencing the convolution directly."""
    values = [binomial_convolution(f, d, n + j) for j in range(k + 1)]
    return forward_diff_at(values, k, 0)


def _simplex(m: int, level: int):
    """All ``i`` in ``N_0^m`` with ``|i| = level`` (lexicographic)."""
    if m == 1:
        yield (level,)
        return
    for first in range(level + 1):
        for rest in _simplex(m - 1, level - first):
            yield (first, *rest)


def surplus_sums(v: Callable[[tuple[int, ...]], object], m: int, length: int) -> list:
    """``s_l = sum_{|i| = l, i in N_0^m} v(i)`` for ``l < length``."""
    return [sum(v(i) for i in _simplex(m, level)) for level in range(length)]


def error_rep_rhs(s: Sequence, d: int, m: int, p: int, n: int):
    """Closed form of ``delta^{d-1} F(n)`` for an order-``p`` error term in ``m`` axes.

    ``s`` holds the level sums of the coefficient table.  The alternating
    weight is ``(-2^p)^i``; with a float ``s`` the result is a float.
    """
    if not 1 <= m <= d:
        raise ValueError(f"need 1 <= m <= d, got m={m}, d={d}")
    if p < 1:
        raise ValueError(f"order must be >= 1, got {p}")
    if len(s) <= n + d - 1:
        raise IndexError(f"s must reach index {n + d - 1}")
    total = 0
    for i in range(m):
        total += s[n + d - i - 1] * binom(m - 1, i) * (-(2**p)) ** i
    scale = 2 ** (p * (n + d - 1))
    if isinstance(total, float):
        return total / scale
    return Fraction(total) / scale


def error_rep_brute(v: Callable[[tuple[int, ...]], object], d: int, m: int, p: int, n: int):
    """Forward ``(d-1)``-fold difference of ``F(n) = sum_{|i|=n} v(i_1..i_m) 2^{-p(i_1+..+i_m)}``.

    Enumerates the full simplex in ``N_0^d``; ``v`` receives the first ``m``
    components of each level vector.
    """

    def big_f(level):
        total = Fraction(0)
        for i in _simplex(d, level):
            head = i[:m]
            total += Fraction(v(head)) / 2 ** (p * sum(head))
        return total

    values = [big_f(n + j) for j in range(d)]
    return forward_diff_at(values, d - 1, 0)
