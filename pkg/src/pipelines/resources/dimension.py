"""Box-counting and localized (Assouad-style) dimension estimates from exact counts.

Counts stay exact integers until they are logged here, in double precision.
"""
import logging
import math
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.stats import gmean

from src.pipelines.resources.coefficients import eta
from src.pipelines.resources.counting import count_bounds, theorem_bound, theorem_scan
from src.pipelines.resources.takagi_errors import InfiniteEtaError, InsufficientDataError, InvalidInputError
from src.pipelines.resources.takagi_schemas import (
    BoxDimensionFit,
    CoefficientSequence,
    DimensionEstimate,
    ExplicitKind,
    GeometricKind,
    ProfileRow,
)

logger = logging.getLogger(__name__)

X0_STRATEGIES = ("grid", "sample")
PROFILE_COLUMNS = ["m", "max_lower", "max_upper", "bound"]


def fit_line(xs: Sequence[float], ys: Sequence[float]) -> DimensionEstimate:
    """Unweighted least-squares line through (x, y) pairs."""
    if len(xs) < 3:
        raise InsufficientDataError(f"a slope fit needs at least 3 points, got {len(xs)}")

    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    return DimensionEstimate(
        slope=float(slope),
        intercept=float(intercept),
        residual_rms=float(np.sqrt(np.mean(residuals ** 2))),
        points=tuple(zip(x.tolist(), y.tolist())),
    )


def theoretical_box_dimension(seq: CoefficientSequence) -> float:
    """2 + log a / log b when the coefficients decay like a^k with ab > 1, else 1."""
    kind = seq.kind
    ratio = None
    if isinstance(kind, GeometricKind):
        ratio = kind.ratio
    elif isinstance(kind, ExplicitKind) and kind.head and kind.head[-1] != 0:
        ratio = kind.tail_ratio

    if ratio is None or ratio * seq.base <= 1:
        return 1.0
    return 2 + math.log(ratio) / math.log(seq.base)


def box_dimension_fit(seq: CoefficientSequence, N_min: int, N_max: int, refinement: int = 1,
                      workers: int = 1, mem_cap: Optional[int] = None) -> BoxDimensionFit:
    """
    Fit log(count) against N log b over the scales b^-N, N_min <= N <= N_max.

    Args:
        seq: coefficient sequence
        N_min: finest scale is b^-N_max, coarsest b^-N_min
        N_max: N_max - N_min must be at least 2
        refinement: extra sample levels for the lower counts
        workers: parallel jobs, one per scale

    Returns:
        BoxDimensionFit with the geometric-mean estimate and the all-lower / all-upper band
    """
    if N_max - N_min < 2 or N_min < 0:
        raise InsufficientDataError(f"box dimension fit needs 0 <= N_min and N_max - N_min >= 2, got {N_min}..{N_max}")

    levels = list(range(N_min, N_max + 1))
    counts = Parallel(n_jobs=workers)(delayed(count_bounds)(seq, N, refinement, mem_cap) for N in levels)

    xs = [N * math.log(seq.base) for N in levels]
    midpoints = [gmean([c.lower, c.upper]) for c in counts]
    fit = BoxDimensionFit(
        estimate=fit_line(xs, np.log(midpoints)),
        lower=fit_line(xs, [math.log(c.lower) for c in counts]),
        upper=fit_line(xs, [math.log(c.upper) for c in counts]),
        counts=tuple(counts),
        reference=theoretical_box_dimension(seq),
    )
    logger.info(f"Box dimension slope {fit.estimate.slope:.4f} "
                f"(lower {fit.lower.slope:.4f}, upper {fit.upper.slope:.4f}, reference {fit.reference:.4f})")
    return fit


def x0_candidates(seq: CoefficientSequence, n: int, m: int, strategy: str = "grid",
                  sample_size: int = 64, seed: int = 0) -> List[Fraction]:
    """Window centers: all level-n grid points, or a seeded sample of the b^-(n+m) grid."""
    if strategy == "grid":
        return [Fraction(j, seq.base ** n) for j in range(seq.base ** n + 1)]

    if strategy == "sample":
        total = seq.base ** (n + m) + 1
        if total <= sample_size:
            indices = range(total)
        else:
            # One stream per (seed, n, m) keeps the sample independent of scheduling
            rng = np.random.default_rng([seed, n, m])
            indices = sorted(set(rng.integers(0, total, size=sample_size).tolist()))
        return [Fraction(j, seq.base ** (n + m)) for j in indices]

    raise InvalidInputError(f"x0 strategy must be one of {X0_STRATEGIES}, got '{strategy}'")


def _profile_level(seq: CoefficientSequence, n: int, m: int, x0_values: List[Fraction], refinement: int,
                   upper: bool, mem_cap: Optional[int]) -> ProfileRow:
    scan = theorem_scan(seq, n, m, refinement, mem_cap, x0_values)
    return ProfileRow(
        base=seq.base,
        n=n,
        m=m,
        max_lower=max(row.bounds.lower for row in scan),
        max_upper=max(row.bounds.upper for row in scan) if upper else None,
        bound=scan[0].theorem_bound,
        windows=len(scan),
    )


def assouad_profile(seq: CoefficientSequence, n_list: Iterable[int], m_list: Iterable[int],
                    x0_strategy: str = "grid", sample_size: int = 64, seed: int = 0, refinement: int = 2,
                    upper: bool = True, workers: int = 1, mem_cap: Optional[int] = None) -> List[ProfileRow]:
    """Maximum localized counts over window centers for every (n, m)."""
    if upper and not eta(seq).is_finite:
        raise InfiniteEtaError("an upper Assouad profile needs a finite eta; request lower counts only")

    levels = [(n, m) for n in n_list for m in m_list]
    if not levels:
        raise InsufficientDataError("the profile needs at least one (n, m) pair")

    rows = Parallel(n_jobs=workers)(
        delayed(_profile_level)(seq, n, m, x0_candidates(seq, n, m, x0_strategy, sample_size, seed),
                                refinement, upper, mem_cap)
        for n, m in levels
    )
    logger.info(f"Assouad profile: {len(rows)} (n, m) pairs, {sum(r.windows for r in rows)} windows")
    return rows


def _max_over_n(profile: List[ProfileRow], which: str) -> dict:
    best = {}
    for row in profile:
        value = row.max_upper if which == "upper" else row.max_lower
        if value is None:
            raise InsufficientDataError("the profile carries no upper counts")
        best[row.m] = max(best.get(row.m, 0), value)
    return best


def assouad_slope(profile: List[ProfileRow], which: str = "upper") -> DimensionEstimate:
    """
    Slope of log_b(max count) against m, the max taken over n and x0.

    Args:
        profile: rows from assouad_profile
        which: 'upper' or 'lower' counts
    """
    if which not in ("upper", "lower"):
        raise InvalidInputError(f"which must be 'upper' or 'lower', got '{which}'")

    best = _max_over_n(profile, which)
    if len(best) < 3:
        raise InsufficientDataError(f"an Assouad slope needs at least 3 values of m, got {len(best)}")

    scale = math.log(profile[0].base)
    ms = sorted(best)
    return fit_line(ms, [math.log(best[m]) / scale for m in ms])


def slope_ceiling(eta_value, m: int, base: int) -> float:
    """1 + log_b(3 (10 eta + m eta + 4)) / m."""
    eta_value = Fraction(eta_value)
    return 1 + math.log(3 * (10 * eta_value + m * eta_value + 4)) / (m * math.log(base))


def profile_table(profile: List[ProfileRow], seq: CoefficientSequence) -> pd.DataFrame:
    """The `m,max_lower,max_upper,bound` table, maxima taken over n."""
    certificate = eta(seq)
    lower = _max_over_n(profile, "lower")
    has_upper = all(row.max_upper is not None for row in profile)
    upper = _max_over_n(profile, "upper") if has_upper else {}

    records = [
        {
            "m": m,
            "max_lower": lower[m],
            "max_upper": upper.get(m, ""),
            "bound": theorem_bound(certificate.value, m, seq.base) if certificate.is_finite else "",
        }
        for m in sorted(lower)
    ]
    return pd.DataFrame(records, columns=PROFILE_COLUMNS)
