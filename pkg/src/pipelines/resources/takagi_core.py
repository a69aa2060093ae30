"""Exact triangle-wave arithmetic and the piecewise-linear partial sums H_n, H_{n,m}.

Grid values of a level-L function live on x_j = j / (2 b^L). Since
phi(b^k x_j) * 2 b^L = b^k * min(j mod 2b^(L-k), 2b^(L-k) - j mod 2b^(L-k)),
every grid value is an integer over the shared denominator 2 b^L Q, where Q is
the least common denominator of the coefficients involved.
"""
import logging
import math
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from src.pipelines.resources.coefficients import coeff, coeff_denominator, eta, tail_bound
from src.pipelines.resources.common.common_functions import format_decimal, format_rational
from src.pipelines.resources.config_loader import config
from src.pipelines.resources.takagi_errors import InfiniteEtaError, InvalidInputError, ResourceLimitError
from src.pipelines.resources.takagi_schemas import CertifiedValue, CoefficientSequence, PiecewiseLinearFunction

logger = logging.getLogger(__name__)


def phi(t) -> Fraction:
    """Distance from t to the nearest integer."""
    t = Fraction(t)
    frac = t - math.floor(t)
    return min(frac, 1 - frac)


def default_mem_cap() -> int:
    return int(config.get_config_value('limits', 'mem_cap', default=1 << 26))


def _check_grid_size(size: int, mem_cap: Optional[int]) -> None:
    cap = default_mem_cap() if mem_cap is None else mem_cap
    if size > cap:
        raise ResourceLimitError(f"Grid of {size} points exceeds the memory cap of {cap} points (raise --mem-cap)")


def _triangle(j: np.ndarray, period: int) -> np.ndarray:
    # min(j mod P, P - j mod P): P * phi(j / P) as an integer
    t = j % period
    return np.minimum(t, period - t)


def _grid_sum(seq: CoefficientSequence, level: int, k_start: int, k_stop: int,
              mem_cap: Optional[int]) -> PiecewiseLinearFunction:
    b = seq.base
    size = 2 * b ** level + 1
    _check_grid_size(size, mem_cap)

    common = coeff_denominator(seq, level)
    j = np.arange(size, dtype=object)
    numerators = np.zeros(size, dtype=object)

    for k in range(k_start, k_stop):
        c = coeff(seq, k)
        if c == 0:
            continue
        scaled = int(c * common) * b ** k
        numerators = numerators + scaled * _triangle(j, 2 * b ** (level - k))

    logger.debug(f"Built grid sum k={k_start}..{k_stop - 1} at level {level} ({size} points)")
    return PiecewiseLinearFunction(base=b, level=level, numerators=numerators, denominator=2 * b ** level * common)


def build_partial_sum(seq: CoefficientSequence, n: int, mem_cap: Optional[int] = None) -> PiecewiseLinearFunction:
    """H_n = sum_{k<n} c_k phi(b^k x) on the level-n grid."""
    if n < 0:
        raise InvalidInputError(f"n must be non-negative, got {n}")
    return _grid_sum(seq, n, 0, n, mem_cap)


def build_window_sum(seq: CoefficientSequence, n: int, m: int,
                     mem_cap: Optional[int] = None) -> PiecewiseLinearFunction:
    """H_{n,m} = sum_{k=n}^{n+m-1} c_k phi(b^k x) on the level-(n+m) grid."""
    if n < 0 or m < 1:
        raise InvalidInputError(f"window sums need n >= 0 and m >= 1, got n={n}, m={m}")
    return _grid_sum(seq, n + m, n, n + m, mem_cap)


def refine(pl: PiecewiseLinearFunction, level: int, mem_cap: Optional[int] = None) -> PiecewiseLinearFunction:
    """Re-sample a PL function exactly on the finer grid j / (2 b^level)."""
    if level < pl.level:
        raise InvalidInputError(f"cannot refine level {pl.level} down to {level}")
    if level == pl.level:
        return pl

    ratio = pl.base ** (level - pl.level)
    size = 2 * pl.base ** level + 1
    _check_grid_size(size, mem_cap)

    j = np.arange(size, dtype=object)
    left = j // ratio
    offset = j % ratio
    # Pad so the right neighbour of the last grid point exists (its weight is zero)
    padded = np.append(np.asarray(pl.numerators, dtype=object), pl.numerators[-1])
    numerators = padded[left.astype(np.int64)] * (ratio - offset) + padded[left.astype(np.int64) + 1] * offset

    return PiecewiseLinearFunction(base=pl.base, level=level, numerators=numerators,
                                   denominator=pl.denominator * ratio)


def _check_unit(x, what="x") -> Fraction:
    x = Fraction(x)
    if not 0 <= x <= 1:
        raise InvalidInputError(f"{what} = {x} lies outside [0, 1]")
    return x


def eval_pl(pl: PiecewiseLinearFunction, x) -> Fraction:
    """Exact value by linear interpolation inside the containing grid cell."""
    x = _check_unit(x)
    position = x * pl.intervals
    j = min(math.floor(position), pl.intervals - 1)
    weight = position - j
    left, right = pl.value_at(j), pl.value_at(j + 1)
    return left + (right - left) * weight


def eval_exact(seq: CoefficientSequence, j: int, N: int) -> Fraction:
    """f(j / b^N) exactly; phi(b^k j / b^N) vanishes for k >= N."""
    if N < 0 or not 0 <= j <= seq.base ** N:
        raise InvalidInputError(f"eval_exact needs 0 <= j <= b^N, got j={j}, N={N}")

    total = Fraction(0)
    for k in range(N):
        period = seq.base ** (N - k)
        t = j % period
        total += coeff(seq, k) * Fraction(min(t, period - t), period)
    return total


def graph_values(seq: CoefficientSequence, M: int, mem_cap: Optional[int] = None) -> Tuple[np.ndarray, int]:
    """
    Exact values f(j / b^M) for j = 0..b^M.

    Returns:
        (numerators, denominator) with numerators an object array over the shared denominator b^M Q
    """
    b = seq.base
    size = b ** M + 1
    _check_grid_size(size, mem_cap)

    common = coeff_denominator(seq, M)
    j = np.arange(size, dtype=object)
    numerators = np.zeros(size, dtype=object)
    for k in range(M):
        c = coeff(seq, k)
        if c == 0:
            continue
        numerators = numerators + int(c * common) * b ** k * _triangle(j, b ** (M - k))

    return numerators, b ** M * common


def partial_sum_value(seq: CoefficientSequence, n: int, x) -> Fraction:
    """H_n(x) by direct summation of the n terms."""
    x = Fraction(x)
    return sum((coeff(seq, k) * phi(seq.base ** k * x) for k in range(n)), Fraction(0))


def certified_level(seq: CoefficientSequence, eps) -> int:
    """Least N with tail_bound(N) <= eps (the closed-form tail is monotone in N)."""
    eps = Fraction(eps)
    if eps <= 0:
        raise InvalidInputError(f"eps must be positive, got {eps}")

    if tail_bound(seq, 0) <= eps:
        return 0

    # Exponential search for an upper end, then bisection on the closed form
    high = 1
    while tail_bound(seq, high) > eps:
        high *= 2
    low = high // 2
    while high - low > 1:
        middle = (low + high) // 2
        if tail_bound(seq, middle) <= eps:
            high = middle
        else:
            low = middle
    return high


def eval_certified(seq: CoefficientSequence, x, eps) -> CertifiedValue:
    """Center H_N(x) and radius tail_bound(N) for the least N meeting eps."""
    x = _check_unit(x)
    level = certified_level(seq, eps)
    logger.debug(f"Certified evaluation at x={x} uses N={level}")
    return CertifiedValue(center=partial_sum_value(seq, level, x), radius=tail_bound(seq, level), level=level)


def _restricted_values(pl: PiecewiseLinearFunction, u: Fraction, v: Fraction) -> List[Fraction]:
    # Values at u, at every grid vertex strictly inside (u, v), and at v
    first = math.floor(u * pl.intervals) + 1
    last = math.ceil(v * pl.intervals) - 1
    inner = [pl.value_at(j) for j in range(first, last + 1)]
    return [eval_pl(pl, u)] + inner + [eval_pl(pl, v)]


def _check_interval(interval) -> Tuple[Fraction, Fraction]:
    u, v = (Fraction(interval[0]), Fraction(interval[1]))
    if u <= v:
        _check_unit(u, "interval start")
        _check_unit(v, "interval end")
    return u, v


def value_range(pl: PiecewiseLinearFunction, interval) -> Tuple[Fraction, Fraction]:
    """(min, max) of the PL function over [u, v]."""
    u, v = _check_interval(interval)
    if u > v:
        raise InvalidInputError(f"empty interval [{u}, {v}]")

    ends = (eval_pl(pl, u), eval_pl(pl, v))
    inner = pl.numerators[math.floor(u * pl.intervals) + 1:math.ceil(v * pl.intervals)]
    if len(inner) == 0:
        return min(ends), max(ends)
    return (min(min(ends), Fraction(int(min(inner)), pl.denominator)),
            max(max(ends), Fraction(int(max(inner)), pl.denominator)))


def oscillation(pl: PiecewiseLinearFunction, interval) -> Fraction:
    """max - min of the PL function over [u, v]; 0 on the empty set (u > v)."""
    u, v = _check_interval(interval)
    if u > v:
        return Fraction(0)
    low, high = value_range(pl, (u, v))
    return high - low


def variation(pl: PiecewiseLinearFunction, interval) -> Fraction:
    """Total variation over [u, v]: sum of |increments| between consecutive vertices."""
    u, v = _check_interval(interval)
    if u > v:
        return Fraction(0)
    values = _restricted_values(pl, u, v)
    return sum((abs(b - a) for a, b in zip(values, values[1:])), Fraction(0))


def lipschitz_constant(seq: CoefficientSequence, terms: int) -> Fraction:
    """terms * eta: Lipschitz constant of a sum of `terms` consecutive terms."""
    certificate = eta(seq)
    if not certificate.is_finite:
        raise InfiniteEtaError("Lipschitz constants of partial sums need a finite eta")
    return terms * certificate.value


def pl_table(pl: PiecewiseLinearFunction, precision: int = 12, exact: bool = False) -> pd.DataFrame:
    """Grid values as an `x,y` table (decimal, plus `y_exact` as p/q when asked)."""
    rows = []
    for j in range(pl.intervals + 1):
        value = pl.value_at(j)
        row = {"x": format_decimal(pl.grid_point(j), precision), "y": format_decimal(value, precision)}
        if exact:
            row["y_exact"] = format_rational(value)
        rows.append(row)
    return pd.DataFrame(rows, columns=["x", "y", "y_exact"] if exact else ["x", "y"])
