import os
import sys
import time
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

# Add project root to sys.path for import resolution
_PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', '..'))
if _PROJECT_ROOT not in sys.path:
    sys.path.insert(0, _PROJECT_ROOT)

from src.pipelines.resources.coefficients import coeff, describe, eta
from src.pipelines.resources.common.common_functions import parse_int, setup_logging, write_table
from src.pipelines.resources.counting import lemma_table, scan_table, theorem_scan, verify_lemma_exhaustive
from src.pipelines.resources.oracle import check_column_bound, dense_containment_check
from src.pipelines.resources.takagi_core import (
    build_partial_sum,
    eval_pl,
    lipschitz_constant,
    partial_sum_value,
    phi,
)
from src.pipelines.resources.takagi_errors import InfiniteEtaError
from src.pipelines.resources.takagi_schemas import CoefficientSequence, RunConfig

logger = setup_logging("verify_pipeline")

PROPERTY_COLUMNS = ["suite", "n", "m", "cases", "ok"]

# Prime denominator: random points miss every b-adic grid except at 0 and 1
_POINT_DENOMINATOR = 999_983


def affordable_level(base: int, level: int, points: int = 1 << 20) -> int:
    """Largest n <= level whose grid of 2 b^n + 1 values stays within `points`."""
    while level > 0 and 2 * base ** level + 1 > points:
        level -= 1
    return level


def _random_points(rng: np.random.Generator, size: int) -> List[Fraction]:
    return [Fraction(int(j), _POINT_DENOMINATOR) for j in rng.integers(0, _POINT_DENOMINATOR + 1, size=size)]


def check_containment(seq: CoefficientSequence, level_max: int, samples: int, seed: int) -> List[Tuple]:
    """Graph points at b-adic x lie in S_n for every n <= level_max."""
    return [
        ("containment", n, "", samples, dense_containment_check(seq, n, samples, seed=seed + n))
        for n in range(level_max + 1)
    ]


def check_midpoint_linearity(seq: CoefficientSequence, level_max: int, samples: int, seed: int) -> List[Tuple]:
    """H_n by direct summation at grid-cell midpoints equals the interpolated value."""
    rows = []
    rng = np.random.default_rng(seed)
    for n in range(level_max + 1):
        Hn = build_partial_sum(seq, n)
        cells = rng.integers(0, Hn.intervals, size=min(samples, Hn.intervals)).tolist()
        ok = True
        for j in cells:
            midpoint = (Hn.grid_point(j) + Hn.grid_point(j + 1)) / 2
            if partial_sum_value(seq, n, midpoint) != eval_pl(Hn, midpoint):
                logger.warning(f"H_{n} is not affine on grid cell {j}")
                ok = False
                break
        rows.append(("linearity", n, "", len(cells), ok))
    return rows


def _partial_sums(seq: CoefficientSequence, points: List[Fraction], levels: int) -> List[List[Fraction]]:
    # sums[k][p] = H_k(points[p]) for k = 0..levels, built one term at a time
    sums = [[Fraction(0)] * len(points)]
    for k in range(levels):
        c, scale = coeff(seq, k), seq.base ** k
        sums.append([h + c * phi(scale * x) for h, x in zip(sums[-1], points)])
    return sums


def check_lipschitz(seq: CoefficientSequence, level_max: int, samples: int, seed: int) -> List[Tuple]:
    """|H_n(x1) - H_n(x2)| <= n eta |x1 - x2| and the same for H_{n,m} with m eta, for n, m <= level_max."""
    rows = []
    rng = np.random.default_rng(seed)
    first, second = _random_points(rng, samples), _random_points(rng, samples)
    sums_first = _partial_sums(seq, first, 2 * level_max)
    sums_second = _partial_sums(seq, second, 2 * level_max)
    gaps = [abs(x1 - x2) for x1, x2 in zip(first, second)]

    for n in range(level_max + 1):
        constant = lipschitz_constant(seq, n)
        ok = all(abs(u - v) <= constant * gap for u, v, gap in zip(sums_first[n], sums_second[n], gaps))
        rows.append(("lipschitz", n, "", samples, ok))

        # H_{n,m} = H_{n+m} - H_n on the same points
        for m in range(1, level_max + 1):
            constant = lipschitz_constant(seq, m)
            ok = all(
                abs((u_far - u) - (v_far - v)) <= constant * gap
                for u, v, u_far, v_far, gap in zip(sums_first[n], sums_second[n],
                                                   sums_first[n + m], sums_second[n + m], gaps)
            )
            rows.append(("lipschitz_window", n, m, samples, ok))
    return rows


def check_column_oscillation(seq: CoefficientSequence, level_max: int, cell_budget: Optional[int] = None) -> List[Tuple]:
    """Oracle per-column counts of H_n stay below oscillation / b^-N + 2."""
    rows = []
    for n in range(level_max + 1):
        Hn = build_partial_sum(seq, n)
        for N in (n, n + 1):
            rows.append(("column_bound", n, N - n, seq.base ** N, check_column_bound(Hn, N, cell_budget)))
    return rows


def cmd_verify(run: RunConfig) -> int:
    """
    Run every lemma suite and the theorem bound scan, write the tables and report.

    Returns:
        0 when every check holds, 1 otherwise
    """
    seq = run.sequence
    if not eta(seq).is_finite:
        raise InfiniteEtaError(f"{describe(seq)} has infinite eta; the lemma and theorem bounds do not apply")

    params = run.params
    n_max = parse_int(params.get("n_max", 6), "n_max")
    m_max = parse_int(params.get("m_max", 5), "m_max")
    property_level = parse_int(params.get("property_level_max", 12), "property_level_max")
    lipschitz_samples = parse_int(params.get("lipschitz_samples", 1000), "lipschitz_samples")
    containment_samples = parse_int(params.get("containment_samples", 1000), "containment_samples")

    logger.info(f"Verifying {describe(seq)} for n <= {n_max}, m <= {m_max} with {run.workers} workers")
    start_time = time.time()

    lemma_rows = verify_lemma_exhaustive(seq, n_max, m_max, run.workers, run.mem_cap)
    lemma_path = write_table(lemma_table(lemma_rows), run.out_dir, "verify_lemma.csv")
    logger.info(f"Key count lemma: {len(lemma_rows)} windows written to {lemma_path}")

    scans = Parallel(n_jobs=run.workers)(
        delayed(theorem_scan)(seq, n, m, 2, run.mem_cap) for n in range(n_max + 1) for m in range(1, m_max + 1)
    )
    scan_rows = [row for scan in scans for row in scan]
    scan_path = write_table(scan_table(scan_rows), run.out_dir, "verify_theorem.csv")
    logger.info(f"Theorem bound: {len(scan_rows)} windows written to {scan_path}")

    # Grid-based suites stay on small grids; the oracle walk is quadratic in b^N
    grid_level = affordable_level(seq.base, property_level)
    oracle_level = min(n_max, affordable_level(seq.base, 8, 1 << 10))
    property_rows = (
        check_containment(seq, grid_level, containment_samples, run.seed)
        + check_midpoint_linearity(seq, min(grid_level, 10), containment_samples, run.seed)
        + check_lipschitz(seq, property_level, lipschitz_samples, run.seed)
        + check_column_oscillation(seq, oracle_level, run.cell_budget)
    )
    properties = pd.DataFrame(property_rows, columns=PROPERTY_COLUMNS)
    properties["ok"] = properties["ok"].map({True: "true", False: "false"})
    property_path = write_table(properties, run.out_dir, "verify_properties.csv")

    failures = (
        sum(not row.ok for row in lemma_rows)
        + sum(not row.ok for row in scan_rows)
        + sum(not row[-1] for row in property_rows)
    )
    logger.info(f"Verification finished in {time.time() - start_time:.2f} seconds with {failures} failures")

    print(f"lemma windows: {len(lemma_rows)}  theorem windows: {len(scan_rows)}  "
          f"property suites: {len(property_rows)}  failures: {failures}")
    print(f"tables: {lemma_path} {scan_path} {property_path}")
    return 0 if failures == 0 else 1
