"""Strip enclosures of the graph and exact mesh-cell counts.

Cells are (c d, (c+1) d] x (r d, (r+1) d] with d = b^-N, closed on the right
and upper sides, and the coordinate 0 is folded into index 0 (so x = 0 lies in
column 0 and the value 0 in row 0). Every point of [0,1] x R lies in exactly
one cell, and a value on a horizontal grid line other than y = 0 counts toward
the cell below it. A set is counted by the number of cells containing at least
one of its points. Within a column the strip (or the graph of a continuous
function) has an interval as y-projection, so its cells are the rows between
the rows of the two ends of that interval; an end that is only approached (an
extremum attained at the excluded left edge of the column) is tracked as open.

Count windows follow the same convention in x: a window covers (x_lo, x_hi],
with x_lo = 0 closed, so a window on the column grid is a union of whole
columns. Its y-range [y_lo, y_hi] is closed.
"""
import logging
import math
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.pipelines.resources.coefficients import eta, tail_bound
from src.pipelines.resources.common.common_functions import b_adic_level, format_rational
from src.pipelines.resources.takagi_core import build_partial_sum, eval_exact, graph_values, refine
from src.pipelines.resources.takagi_errors import InfiniteEtaError, InvalidInputError
from src.pipelines.resources.takagi_schemas import (
    CoefficientSequence,
    CountBounds,
    CountWindow,
    LemmaKeyCheck,
    LocalizedCount,
    PiecewiseLinearFunction,
    RestrictedDomain,
    Strip,
    WindowSpec,
)

logger = logging.getLogger(__name__)


class ColumnExtents(NamedTuple):
    """Per-column y-extent of a strip at scale b^-level, numerators over `denominator`."""
    lo: np.ndarray
    lo_closed: np.ndarray
    hi: np.ndarray
    hi_closed: np.ndarray
    denominator: int
    base: int
    level: int

    @property
    def columns(self) -> int:
        return self.base ** self.level

    def rescaled(self, factor: int) -> "ColumnExtents":
        if factor == 1:
            return self
        return self._replace(lo=self.lo * factor, hi=self.hi * factor, denominator=self.denominator * factor)


def lemma_bound(eta_value: Fraction, m: int, base: int) -> int:
    """ceil((10 eta + m eta + 4) b^m)."""
    return math.ceil((10 * eta_value + m * eta_value + 4) * base ** m)


def theorem_bound(eta_value: Fraction, m: int, base: int) -> int:
    """ceil(3 (10 eta + m eta + 4) b^m)."""
    return math.ceil(3 * (10 * eta_value + m * eta_value + 4) * base ** m)


def make_strip(seq: CoefficientSequence, n: int, mem_cap: Optional[int] = None) -> Strip:
    """S_n: the graph of H_n thickened by the certified tail half-width."""
    return Strip(center=build_partial_sum(seq, n, mem_cap), halfwidth=tail_bound(seq, n), n=n)


def strip_extents(strip: Strip, N: int, mem_cap: Optional[int] = None) -> ColumnExtents:
    if N < strip.n:
        raise InvalidInputError(f"count scale N={N} must be at least the strip level n={strip.n}")

    # Two grid steps per column once the center is sampled at level N
    pl = refine(strip.center, N, mem_cap)
    common = math.lcm(pl.denominator, strip.halfwidth.denominator)
    values = np.asarray(pl.numerators, dtype=object) * (common // pl.denominator)
    w = int(strip.halfwidth * common)

    left, middle, right = values[0:-1:2], values[1::2], values[2::2]
    inner_lo = np.minimum(middle, right)
    inner_hi = np.maximum(middle, right)

    # The left edge of a column belongs to the column before it
    lo_closed = np.asarray(inner_lo <= left, dtype=bool)
    hi_closed = np.asarray(inner_hi >= left, dtype=bool)
    # Column 0 contains x = 0
    lo_closed[0] = True
    hi_closed[0] = True

    return ColumnExtents(
        lo=np.minimum(inner_lo, left) - w,
        lo_closed=lo_closed,
        hi=np.maximum(inner_hi, left) + w,
        hi_closed=hi_closed,
        denominator=common,
        base=pl.base,
        level=N,
    )


def _cell_rows(scaled, denominator: int):
    # Row (r d, (r+1) d] holding an attained value; the value 0 sits in row 0
    row = -((-scaled) // denominator) - 1
    return np.where(scaled == 0, row + 1, row)


def _row_counts(lo, lo_closed, hi, hi_closed, denominator: int, cells_per_unit: int) -> np.ndarray:
    # Rows met by a y-interval with the given (open/closed) ends
    scaled_lo = lo * cells_per_unit
    scaled_hi = hi * cells_per_unit
    row_lo = np.where(lo_closed, _cell_rows(scaled_lo, denominator), scaled_lo // denominator)
    row_hi = np.where(hi_closed, _cell_rows(scaled_hi, denominator), -((-scaled_hi) // denominator) - 1)
    nonempty = np.asarray((lo < hi) | ((lo == hi) & lo_closed & hi_closed), dtype=bool)
    return np.where(nonempty, row_hi - row_lo + 1, 0)


def _clip(lo, lo_closed, hi, hi_closed, y_lo, y_hi):
    # Intersect y-intervals with the closed window [y_lo, y_hi]
    clipped_lo = np.maximum(lo, y_lo)
    clipped_lo_closed = np.asarray(lo_closed | (lo < y_lo), dtype=bool)
    clipped_hi = np.minimum(hi, y_hi)
    clipped_hi_closed = np.asarray(hi_closed | (hi > y_hi), dtype=bool)
    return clipped_lo, clipped_lo_closed, clipped_hi, clipped_hi_closed


def column_counts(strip: Strip, N: int, mem_cap: Optional[int] = None) -> np.ndarray:
    """Cells met by the strip in each of the b^N columns."""
    ext = strip_extents(strip, N, mem_cap)
    return _row_counts(ext.lo, ext.lo_closed, ext.hi, ext.hi_closed, ext.denominator, ext.base ** N)


def window_level(window: CountWindow, base: int, N: int) -> int:
    """Finest b-adic level needed to resolve the window's x-bounds at scale b^-N."""
    if window.x_lo < 0 or window.x_hi > 1:
        raise InvalidInputError("window x-bounds must lie inside [0, 1]")
    if window.x_lo == window.x_hi:
        raise InvalidInputError(f"window x-range ({window.x_lo}, {window.x_hi}] is empty")

    levels = [b_adic_level(window.x_lo, base), b_adic_level(window.x_hi, base)]
    if None in levels:
        raise InvalidInputError(f"window x-bounds [{window.x_lo}, {window.x_hi}] must be b-adic for base {base}")
    return max(N, *levels)


def _coarsen(ext: ColumnExtents, first: int, last: int, group: int):
    # Merge fine columns first..last-1 into the coarse columns holding them
    lo, lo_closed = ext.lo[first:last], ext.lo_closed[first:last]
    hi, hi_closed = ext.hi[first:last], ext.hi_closed[first:last]
    if group == 1:
        return lo, lo_closed, hi, hi_closed

    coarse = np.arange(first, last, dtype=np.int64) // group
    starts = np.flatnonzero(np.r_[True, coarse[1:] != coarse[:-1]])
    sizes = np.diff(np.r_[starts, len(coarse)])
    merged_lo = np.minimum.reduceat(lo, starts)
    merged_hi = np.maximum.reduceat(hi, starts)

    # A merged end is closed when a fine column attaining it has it closed
    attains_lo = np.asarray(lo == np.repeat(merged_lo, sizes), dtype=bool) & lo_closed
    attains_hi = np.asarray(hi == np.repeat(merged_hi, sizes), dtype=bool) & hi_closed
    return (merged_lo, np.logical_or.reduceat(attains_lo, starts),
            merged_hi, np.logical_or.reduceat(attains_hi, starts))


def _window_strip_count(ext: ColumnExtents, window: Optional[CountWindow], N: int) -> int:
    # `ext` is taken at a level at least N that resolves the window's x-bounds
    cells_per_unit = ext.base ** N
    if window is None:
        return int(np.sum(_row_counts(ext.lo, ext.lo_closed, ext.hi, ext.hi_closed, ext.denominator, cells_per_unit)))

    first, last = window.x_lo * ext.columns, window.x_hi * ext.columns
    if first.denominator != 1 or last.denominator != 1:
        raise InvalidInputError(f"window x-bounds [{window.x_lo}, {window.x_hi}] are finer than level {ext.level}")
    lo, lo_closed, hi, hi_closed = _coarsen(ext, int(first), int(last), ext.base ** (ext.level - N))

    common = math.lcm(ext.denominator, window.y_lo.denominator, window.y_hi.denominator)
    factor = common // ext.denominator
    clipped = _clip(lo * factor, lo_closed, hi * factor, hi_closed,
                    int(window.y_lo * common), int(window.y_hi * common))
    return int(np.sum(_row_counts(*clipped, common, cells_per_unit)))


def strip_mesh_count(strip: Strip, N: int, window: Optional[CountWindow] = None,
                     mem_cap: Optional[int] = None) -> int:
    """Exact number of b^-N cells meeting the strip (inside the window when given)."""
    level = N if window is None else window_level(window, strip.center.base, N)
    return _window_strip_count(strip_extents(strip, level, mem_cap), window, N)


class GraphSamples:
    """Exact graph points (j / b^(N+q), f(j / b^(N+q))) used for lower counts at scale b^-N."""

    def __init__(self, seq: CoefficientSequence, N: int, refinement: int = 0, mem_cap: Optional[int] = None):
        if refinement < 0:
            raise InvalidInputError(f"refinement must be non-negative, got {refinement}")
        self.base = seq.base
        self.level = N
        self.refinement = refinement
        self.numerators, self.denominator = graph_values(seq, N + refinement, mem_cap)

    @property
    def columns(self) -> int:
        return self.base ** self.level

    def _select(self, window: Optional[CountWindow]):
        # Column of every sample inside the window's x-range (x_lo, x_hi]
        per_column = self.base ** self.refinement
        total = self.columns * per_column

        start, stop = 0, total
        if window is not None:
            start = 0 if window.x_lo <= 0 else math.floor(window.x_lo * total) + 1
            stop = min(total, math.floor(window.x_hi * total))
        if stop < start:
            return None

        j = np.arange(start, stop + 1, dtype=np.int64)
        # Sample j sits in column ceil(j / per_column) - 1, x = 0 in column 0
        columns = np.maximum((j - 1) // per_column, 0)
        return columns, self.numerators[start:stop + 1]

    def point_count(self, window: Optional[CountWindow] = None) -> int:
        """Distinct cells containing at least one sample."""
        selected = self._select(window)
        if selected is None:
            return 0
        columns, values = selected

        if window is not None:
            inside = np.asarray(
                (values * window.y_lo.denominator >= window.y_lo.numerator * self.denominator)
                & (values * window.y_hi.denominator <= window.y_hi.numerator * self.denominator),
                dtype=bool,
            )
            columns, values = columns[inside], values[inside]

        rows = _cell_rows(values * self.columns, self.denominator)
        return len(set(zip(columns.tolist(), rows.tolist())))

    def connected_count(self, window: Optional[CountWindow] = None) -> int:
        """
        Rigorous lower bound using continuity of f on each column.

        Every value between the lowest and highest sample of a column is attained
        inside that column, so all rows in between are met.
        """
        selected = self._select(window)
        if selected is None:
            return 0
        columns, values = selected

        starts = np.flatnonzero(np.r_[True, columns[1:] != columns[:-1]])
        lowest = np.minimum.reduceat(values, starts)
        highest = np.maximum.reduceat(values, starts)

        denominator = self.denominator
        if window is not None:
            common = math.lcm(denominator, window.y_lo.denominator, window.y_hi.denominator)
            factor = common // denominator
            lowest = np.maximum(lowest * factor, int(window.y_lo * common))
            highest = np.minimum(highest * factor, int(window.y_hi * common))
            denominator = common

        rows_lo = _cell_rows(lowest * self.columns, denominator)
        rows_hi = _cell_rows(highest * self.columns, denominator)
        met = np.asarray(lowest <= highest, dtype=bool)
        return int(np.sum(np.where(met, rows_hi - rows_lo + 1, 0)))


def graph_point_lower_count(seq: CoefficientSequence, N: int, window: Optional[CountWindow] = None,
                            refinement: int = 0, mem_cap: Optional[int] = None) -> int:
    """Distinct b^-N cells hit by exact graph points at x = j / b^(N+q)."""
    return GraphSamples(seq, N, refinement, mem_cap).point_count(window)


def connected_lower_count(seq: CoefficientSequence, N: int, window: Optional[CountWindow] = None,
                          refinement: int = 0, mem_cap: Optional[int] = None) -> int:
    """Continuity-filled lower bound from exact graph points at x = j / b^(N+q)."""
    return GraphSamples(seq, N, refinement, mem_cap).connected_count(window)


class WindowCounter:
    """Lower and upper counts at one scale b^-N for many windows.

    The strip extents and the exact samples are computed once and sliced per
    window; windows with finer x-bounds get extents at their own level, cached.
    """

    def __init__(self, seq: CoefficientSequence, N: int, refinement: int = 0, mem_cap: Optional[int] = None):
        self.base = seq.base
        self.level = N
        self.mem_cap = mem_cap
        self.strip = make_strip(seq, N, mem_cap)
        self.extents: Dict[int, ColumnExtents] = {N: strip_extents(self.strip, N, mem_cap)}
        self.samples = GraphSamples(seq, N, refinement, mem_cap)

    def _extents_at(self, level: int) -> ColumnExtents:
        if level not in self.extents:
            self.extents[level] = strip_extents(self.strip, level, self.mem_cap)
        return self.extents[level]

    def strip_count(self, window: Optional[CountWindow] = None) -> int:
        level = self.level if window is None else window_level(window, self.base, self.level)
        return _window_strip_count(self._extents_at(level), window, self.level)

    def lower_count(self, window: Optional[CountWindow] = None) -> int:
        return self.samples.connected_count(window)

    def bounds(self, window: Optional[CountWindow] = None) -> CountBounds:
        upper = self.strip_count(window)
        return CountBounds(lower=self.lower_count(window), upper=upper,
                           base=self.base, level=self.level, region=window)


def count_bounds(seq: CoefficientSequence, N: int, refinement: int = 1,
                 mem_cap: Optional[int] = None) -> CountBounds:
    """Lower and upper counts of the whole graph at scale b^-N."""
    bounds = WindowCounter(seq, N, refinement, mem_cap).bounds()
    logger.debug(f"N={N}: lower={bounds.lower} upper={bounds.upper}")
    return bounds


def restricted_domain(Hn: PiecewiseLinearFunction, i: int, y, eta_value) -> RestrictedDomain:
    """
    D = {x in column i : |H_n(x) - y| <= 2 eta b^-n}, one interval per half column.

    Args:
        Hn: partial sum H_n (level n, affine on each half column)
        i: column index, 1 <= i <= b^n
        y: window center
        eta_value: the constant eta
    """
    n, b = Hn.level, Hn.base
    if not 1 <= i <= b ** n:
        raise InvalidInputError(f"column index must satisfy 1 <= i <= b^n, got {i}")

    y = Fraction(y)
    radius = 2 * Fraction(eta_value) / b ** n
    halves = []
    for j in (2 * (i - 1), 2 * i - 1):
        xa, xb = Hn.grid_point(j), Hn.grid_point(j + 1)
        va, vb = Hn.value_at(j), Hn.value_at(j + 1)
        slope = (vb - va) / (xb - xa)

        if slope == 0:
            halves.append((xa, xb) if abs(va - y) <= radius else None)
            continue

        # Solve the two affine inequalities exactly
        ends = sorted((xa + (y - radius - va) / slope, xa + (y + radius - va) / slope))
        lo, hi = max(xa, ends[0]), min(xb, ends[1])
        halves.append((lo, hi) if lo <= hi else None)

    return RestrictedDomain(n=n, i=i, halves=tuple(halves))


def _finite_eta(seq: CoefficientSequence) -> Fraction:
    certificate = eta(seq)
    if not certificate.is_finite:
        raise InfiniteEtaError("eta is infinite (sup_k b^k |c_k| diverges); lemma and theorem bounds do not apply")
    return certificate.value


def verify_lemma_key(seq: CoefficientSequence, n: int, m: int, i: int, y,
                     mem_cap: Optional[int] = None) -> LemmaKeyCheck:
    """Count S_{n+m} in the window of column i around y and compare with (10 eta + m eta + 4) b^m."""
    eta_value = _finite_eta(seq)
    spec = WindowSpec(n=n, m=m, i=i, y_center=Fraction(y))
    if i > seq.base ** n:
        raise InvalidInputError(f"column index must satisfy 1 <= i <= b^n, got {i}")

    strip = make_strip(seq, n + m, mem_cap)
    count = strip_mesh_count(strip, n + m, spec.rectangle(seq.base, eta_value), mem_cap)
    bound = lemma_bound(eta_value, m, seq.base)
    return LemmaKeyCheck(n=n, m=m, i=i, y=spec.y_center, count=count, bound=bound, ok=count <= bound)


def lemma_y_centers(Hn: PiecewiseLinearFunction, i: int, eta_value: Fraction) -> List[Fraction]:
    """The three level-n grid values of H_n on column i, each also shifted by +-eta b^-n."""
    shift = eta_value / Hn.base ** Hn.level
    values = [Hn.value_at(j) for j in (2 * (i - 1), 2 * i - 1, 2 * i)]
    return sorted({v + delta for v in values for delta in (-shift, 0, shift)})


def _lemma_rows_for_level(seq: CoefficientSequence, n: int, m: int, eta_value: Fraction,
                          mem_cap: Optional[int]) -> List[LemmaKeyCheck]:
    b, N = seq.base, n + m
    ext = strip_extents(make_strip(seq, N, mem_cap), N, mem_cap)
    Hn = build_partial_sum(seq, n, mem_cap)
    shift = eta_value / b ** n

    centers = [lemma_y_centers(Hn, i, eta_value) for i in range(1, b ** n + 1)]
    width = max(len(c) for c in centers)
    common = math.lcm(ext.denominator, Hn.denominator, shift.denominator,
                      *(y.denominator for column in centers for y in column))
    ext = ext.rescaled(common // ext.denominator)

    # Pad ragged center lists by repeating the last one; duplicates are dropped below
    padded = np.empty((b ** n, width), dtype=object)
    for row, column in enumerate(centers):
        padded[row, :] = [int(y * common) for y in column] + [int(column[-1] * common)] * (width - len(column))
    h = int(shift * common)
    y_lo = (padded - h)[:, :, None]
    y_hi = (padded + h)[:, :, None]

    shape = (b ** n, 1, b ** m)
    clipped = _clip(ext.lo.reshape(shape), ext.lo_closed.reshape(shape), ext.hi.reshape(shape),
                    ext.hi_closed.reshape(shape), y_lo, y_hi)
    counts = np.sum(_row_counts(*clipped, common, b ** N), axis=-1)

    bound = lemma_bound(eta_value, m, b)
    rows = []
    for index, column in enumerate(centers):
        for position, y in enumerate(column):
            count = int(counts[index, position])
            rows.append(LemmaKeyCheck(n=n, m=m, i=index + 1, y=y, count=count, bound=bound, ok=count <= bound))

    logger.debug(f"Lemma sweep n={n} m={m}: {len(rows)} windows, max count {max(r.count for r in rows)} / {bound}")
    return rows


def verify_lemma_exhaustive(seq: CoefficientSequence, n_max: int, m_max: int, workers: int = 1,
                            mem_cap: Optional[int] = None) -> List[LemmaKeyCheck]:
    """Every column i and every configuration-covering y for 0 <= n <= n_max, 1 <= m <= m_max."""
    eta_value = _finite_eta(seq)
    levels = [(n, m) for n in range(n_max + 1) for m in range(1, m_max + 1)]
    results = Parallel(n_jobs=workers)(
        delayed(_lemma_rows_for_level)(seq, n, m, eta_value, mem_cap) for n, m in levels
    )
    return [row for level_rows in results for row in level_rows]


def localized_window(seq: CoefficientSequence, x0, n: int, m: int) -> CountWindow:
    """Q((x0, f(x0)), b^-n) clipped to [0, 1] in x, for any b-adic x0 of [0, 1]."""
    b = seq.base
    x0 = Fraction(x0)
    level = b_adic_level(x0, b)
    if not 0 <= x0 <= 1 or level is None:
        raise InvalidInputError(f"x0 = {x0} must be a b-adic point of [0, 1]")

    y0 = eval_exact(seq, int(x0 * b ** level), level)
    radius = Fraction(1, b ** n)
    return CountWindow(x_lo=max(Fraction(0), x0 - radius), x_hi=min(Fraction(1), x0 + radius),
                       y_lo=y0 - radius, y_hi=y0 + radius)


def localized_count(seq: CoefficientSequence, x0, n: int, m: int, refinement: int = 2,
                    mem_cap: Optional[int] = None, counter: Optional[WindowCounter] = None) -> CountBounds:
    """Lower/upper b^-(n+m) counts of the graph inside Q((x0, f(x0)), b^-n)."""
    window = localized_window(seq, x0, n, m)
    if counter is None:
        counter = WindowCounter(seq, n + m, refinement, mem_cap)
    return counter.bounds(window)


def theorem_scan(seq: CoefficientSequence, n: int, m: int, refinement: int = 2,
                 mem_cap: Optional[int] = None, x0_values: Optional[List[Fraction]] = None) -> List[LocalizedCount]:
    """Localized counts for every x0 on the level-n grid (or the given x0 values)."""
    certificate = eta(seq)
    bound = theorem_bound(certificate.value, m, seq.base) if certificate.is_finite else None
    if x0_values is None:
        x0_values = [Fraction(j, seq.base ** n) for j in range(seq.base ** n + 1)]

    counter = WindowCounter(seq, n + m, refinement, mem_cap)
    return [
        LocalizedCount(x0=x0, n=n, m=m, bounds=localized_count(seq, x0, n, m, counter=counter), theorem_bound=bound)
        for x0 in x0_values
    ]


# CSV tables
LEMMA_COLUMNS = ["n", "m", "i", "y", "count", "bound", "ok"]
SCAN_COLUMNS = ["x0", "n", "m", "lower", "upper", "theorem_bound"]


def lemma_table(rows: List[LemmaKeyCheck]) -> pd.DataFrame:
    """Lemma checks as the `n,m,i,y,count,bound,ok` table; y is written as an exact p/q."""
    records = [
        {"n": r.n, "m": r.m, "i": r.i, "y": format_rational(r.y), "count": r.count, "bound": r.bound,
         "ok": "true" if r.ok else "false"}
        for r in rows
    ]
    return pd.DataFrame(records, columns=LEMMA_COLUMNS)


def scan_table(rows: List[LocalizedCount]) -> pd.DataFrame:
    """Localized counts as the `x0,n,m,lower,upper,theorem_bound` table."""
    records = [
        {"x0": format_rational(r.x0), "n": r.n, "m": r.m, "lower": r.bounds.lower, "upper": r.bounds.upper,
         "theorem_bound": "" if r.theorem_bound is None else r.theorem_bound}
        for r in rows
    ]
    return pd.DataFrame(records, columns=SCAN_COLUMNS)
