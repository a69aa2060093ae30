"""Brute-force ground truth for small sizes.

Everything here is plain Fraction arithmetic, one segment and one cell at a
time, and shares no code path with the vectorised counting module.
"""
import logging
import math
from collections import Counter
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from src.pipelines.resources.coefficients import tail_bound
from src.pipelines.resources.config_loader import config
from src.pipelines.resources.takagi_core import build_partial_sum, eval_exact, eval_pl, oscillation
from src.pipelines.resources.takagi_errors import InvalidInputError, ResourceLimitError
from src.pipelines.resources.takagi_schemas import CoefficientSequence, PiecewiseLinearFunction, SegmentWalkResult

logger = logging.getLogger(__name__)


def default_cell_budget() -> int:
    return int(config.get_config_value('limits', 'cell_budget', default=10_000_000))


def _cell_index(t: Fraction, cells_per_unit: int) -> int:
    # Cells are (k d, (k+1) d] and the coordinate 0 is folded into cell 0
    if t == 0:
        return 0
    return math.ceil(t * cells_per_unit) - 1


def _rows_between(y_start: Fraction, y_end: Fraction, cells_per_unit: int) -> range:
    # Rows met by the values of an affine piece on (x_start, x_end], the start excluded
    if y_start == y_end:
        row = _cell_index(y_end, cells_per_unit)
        return range(row, row + 1)
    if y_start < y_end:
        return range(math.floor(y_start * cells_per_unit), _cell_index(y_end, cells_per_unit) + 1)
    return range(_cell_index(y_end, cells_per_unit), math.ceil(y_start * cells_per_unit))


def _pieces(pl: PiecewiseLinearFunction, N: int) -> List[Tuple[int, Fraction, Fraction]]:
    # Split every segment of the PL graph at the column boundaries c / b^N
    columns = pl.base ** N
    pieces = []
    for j in range(pl.intervals):
        x_start, x_end = pl.grid_point(j), pl.grid_point(j + 1)
        y_start, y_end = pl.value_at(j), pl.value_at(j + 1)
        slope = (y_end - y_start) / (x_end - x_start)

        cuts = [x_start]
        boundary = Fraction(math.floor(x_start * columns) + 1, columns)
        while boundary < x_end:
            cuts.append(boundary)
            boundary += Fraction(1, columns)
        cuts.append(x_end)

        for left, right in zip(cuts, cuts[1:]):
            column = _cell_index(right, columns)
            pieces.append((column, y_start + slope * (left - x_start), y_start + slope * (right - x_start)))
    return pieces


def segment_walk(pl: PiecewiseLinearFunction, N: int, cell_budget: Optional[int] = None) -> SegmentWalkResult:
    """
    Walk every linear piece of the graph and collect the b^-N cells it crosses.

    Args:
        pl: piecewise-linear function on [0, 1]
        N: scale level
        cell_budget: maximum number of visited cells

    Returns:
        SegmentWalkResult with the set of (column, row) pairs
    """
    if N < 0:
        raise InvalidInputError(f"scale level must be non-negative, got {N}")
    budget = default_cell_budget() if cell_budget is None else cell_budget
    columns = pl.base ** N

    cells = set()
    for column, y_start, y_end in _pieces(pl, N):
        rows = _rows_between(y_start, y_end, columns)
        if len(cells) + len(rows) > budget:
            raise ResourceLimitError(f"Segment walk exceeds the cell budget of {budget} cells")
        cells.update((column, row) for row in rows)

    # x = 0 is folded into column 0
    cells.add((0, _cell_index(pl.value_at(0), columns)))

    logger.debug(f"Segment walk at N={N}: {len(cells)} cells")
    return SegmentWalkResult(cells=frozenset(cells), count=len(cells))


def pl_graph_mesh_count(pl: PiecewiseLinearFunction, N: int, cell_budget: Optional[int] = None) -> int:
    """Exact number of b^-N cells meeting the graph of a PL function."""
    return segment_walk(pl, N, cell_budget).count


def column_counts(pl: PiecewiseLinearFunction, N: int, cell_budget: Optional[int] = None) -> np.ndarray:
    """Oracle cell counts per column."""
    per_column = Counter(column for column, _ in segment_walk(pl, N, cell_budget).cells)
    return np.array([per_column.get(c, 0) for c in range(pl.base ** N)], dtype=np.int64)


def check_column_bound(pl: PiecewiseLinearFunction, N: int, cell_budget: Optional[int] = None) -> bool:
    """Per column: cells met by the graph <= oscillation / b^-N + 2."""
    columns = pl.base ** N
    counts = column_counts(pl, N, cell_budget)
    for c in range(columns):
        allowed = oscillation(pl, (Fraction(c, columns), Fraction(c + 1, columns))) * columns + 2
        if counts[c] > allowed:
            logger.warning(f"Column {c} at N={N}: {counts[c]} cells exceed {allowed}")
            return False
    return True


def dense_containment_check(seq: CoefficientSequence, n: int, samples: int, seed: int = 0,
                            level: Optional[int] = None) -> bool:
    """
    Check (x, f(x)) in S_n at b-adic sample points x = j / b^level.

    The points are every grid point when there are at most `samples` of them, a
    seeded uniform sample otherwise.
    """
    level = n + 8 if level is None else level
    if level < n:
        raise InvalidInputError(f"sample level {level} must be at least n={n}")

    total = seq.base ** level + 1
    if total <= samples:
        indices = range(total)
    else:
        indices = sorted(set(np.random.default_rng(seed).integers(0, total, size=samples).tolist()))

    Hn = build_partial_sum(seq, n)
    width = tail_bound(seq, n)
    for j in indices:
        x = Fraction(j, seq.base ** level)
        if abs(eval_exact(seq, j, level) - eval_pl(Hn, x)) > width:
            logger.warning(f"Graph point at x={x} leaves S_{n}")
            return False
    return True


def dump_cells(result: SegmentWalkResult, path: str) -> None:
    """Write visited cells as a sorted `col,row` CSV."""
    frame = pd.DataFrame(sorted(result.cells), columns=["col", "row"])
    frame.to_csv(path, index=False, lineterminator="\n")
