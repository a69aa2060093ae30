import json
import os
import sys
import time

import pandas as pd

# Add project root to sys.path for import resolution
_PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', '..'))
if _PROJECT_ROOT not in sys.path:
    sys.path.insert(0, _PROJECT_ROOT)

from src.pipelines.resources.coefficients import describe, eta
from src.pipelines.resources.common.common_functions import (
    format_rational,
    parse_int,
    parse_int_list,
    setup_logging,
    write_table,
)
from src.pipelines.resources.dimension import (
    assouad_profile,
    assouad_slope,
    box_dimension_fit,
    profile_table,
    slope_ceiling,
)
from src.pipelines.resources.takagi_errors import InvalidInputError
from src.pipelines.resources.takagi_schemas import DimensionEstimate, RunConfig

logger = setup_logging("dimension_pipeline")


def _estimate_record(estimate: DimensionEstimate) -> dict:
    return {"slope": estimate.slope, "intercept": estimate.intercept, "residual_rms": estimate.residual_rms}


def _write_summary(summary: dict, out_dir: str, filename: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, filename)
    with open(path, 'w', encoding='utf-8') as file:
        json.dump(summary, file, indent=2, sort_keys=True)
        file.write("\n")
    return path


def _configuration_echo(run: RunConfig) -> dict:
    # Workers are left out: results do not depend on them
    return {
        "sequence": describe(run.sequence),
        "seed": run.seed,
        "params": {key: str(value) for key, value in sorted(run.params.items())},
    }


def cmd_boxdim(run: RunConfig) -> int:
    """Box-counting slope over N_min..N_max, `N,lower,upper` table and JSON summary."""
    seq = run.sequence
    n_min = parse_int(run.params.get("n_min", 6), "n_min")
    n_max = parse_int(run.params.get("n_max", 14), "n_max")
    refinement = parse_int(run.params.get("refinement", 1), "refinement")

    start_time = time.time()
    logger.info(f"Box dimension of {describe(seq)} over N = {n_min}..{n_max}")
    fit = box_dimension_fit(seq, n_min, n_max, refinement, run.workers, run.mem_cap)

    counts = pd.DataFrame(
        [{"N": c.level, "lower": c.lower, "upper": c.upper} for c in fit.counts],
        columns=["N", "lower", "upper"],
    )
    table_path = write_table(counts, run.out_dir, "boxdim.csv")

    summary = {
        "command": "boxdim",
        "estimate": _estimate_record(fit.estimate),
        "lower": _estimate_record(fit.lower),
        "upper": _estimate_record(fit.upper),
        "reference": fit.reference,
        "configuration": _configuration_echo(run),
    }
    summary_path = _write_summary(summary, run.out_dir, "boxdim_summary.json")
    logger.info(f"Box dimension finished in {time.time() - start_time:.2f} seconds")

    print(f"slope {fit.estimate.slope:.4f} (lower {fit.lower.slope:.4f}, upper {fit.upper.slope:.4f}, "
          f"reference {fit.reference:.4f})")
    print(f"tables: {table_path} {summary_path}")
    return 0


def cmd_assouad(run: RunConfig) -> int:
    """Localized max-count profile, `m,max_lower,max_upper,bound` table and JSON summary."""
    seq = run.sequence
    params = run.params
    n_list = parse_int_list(params.get("n_list", [2, 3, 4, 5, 6]), "n_list")
    m_list = parse_int_list(params.get("m_list", [1, 2, 3, 4, 5, 6, 7, 8]), "m_list")
    strategy = str(params.get("x0_strategy", "grid"))
    sample_size = parse_int(params.get("sample_size", 64), "sample_size")
    refinement = parse_int(params.get("refinement", 2), "refinement")
    upper = not bool(params.get("lower_only", False))

    start_time = time.time()
    logger.info(f"Assouad profile of {describe(seq)}: n in {n_list}, m in {m_list}, x0 by {strategy}")
    profile = assouad_profile(seq, n_list, m_list, strategy, sample_size, run.seed, refinement, upper,
                              run.workers, run.mem_cap)
    table_path = write_table(profile_table(profile, seq), run.out_dir, "assouad.csv")

    summary = {
        "command": "assouad",
        "lower": _estimate_record(assouad_slope(profile, "lower")),
        "windows": sum(row.windows for row in profile),
        "configuration": _configuration_echo(run),
    }
    report = f"lower slope {summary['lower']['slope']:.4f}"

    if upper:
        certificate = eta(seq)
        summary["upper"] = _estimate_record(assouad_slope(profile, "upper"))
        summary["eta"] = format_rational(certificate.value)
        summary["slope_ceiling"] = slope_ceiling(certificate.value, max(m_list), seq.base)
        report = f"upper slope {summary['upper']['slope']:.4f} (ceiling {summary['slope_ceiling']:.4f}), " + report

    summary_path = _write_summary(summary, run.out_dir, "assouad_summary.json")
    logger.info(f"Assouad profile finished in {time.time() - start_time:.2f} seconds")

    print(report)
    print(f"tables: {table_path} {summary_path}")
    return 0


DIMENSION_COMMANDS = {"boxdim": cmd_boxdim, "assouad": cmd_assouad}


def cmd_dimension(run: RunConfig, mode: str) -> int:
    """Run the box-counting fit ('boxdim') or the Assouad profile ('assouad')."""
    if mode not in DIMENSION_COMMANDS:
        raise InvalidInputError(f"dimension mode must be one of {sorted(DIMENSION_COMMANDS)}, got '{mode}'")
    return DIMENSION_COMMANDS[mode](run)
