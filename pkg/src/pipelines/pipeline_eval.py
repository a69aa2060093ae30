import os
import sys
import time

# Add project root to sys.path for import resolution
_PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', '..'))
if _PROJECT_ROOT not in sys.path:
    sys.path.insert(0, _PROJECT_ROOT)

from src.pipelines.resources.coefficients import describe
from src.pipelines.resources.common.common_functions import (
    b_adic_level,
    format_decimal,
    format_rational,
    parse_int,
    parse_rational,
    setup_logging,
    write_table,
)
from src.pipelines.resources.takagi_core import (
    build_partial_sum,
    build_window_sum,
    eval_certified,
    eval_exact,
    pl_table,
)
from src.pipelines.resources.takagi_errors import ConfigError, InvalidInputError
from src.pipelines.resources.takagi_schemas import RunConfig

logger = setup_logging("eval_pipeline")


def cmd_eval(run: RunConfig) -> int:
    """
    Print f(x): the exact rational for b-adic x, a certified decimal interval otherwise.

    Args:
        run: parsed run configuration; params carry 'x' and 'eps'

    Returns:
        Process exit code
    """
    if "x" not in run.params:
        raise ConfigError("eval needs a point: pass --x")

    seq = run.sequence
    x = parse_rational(run.params["x"], "x")
    if not 0 <= x <= 1:
        raise InvalidInputError(f"x = {format_rational(x)} lies outside [0, 1]")

    level = b_adic_level(x, seq.base)
    if level is not None:
        value = eval_exact(seq, int(x * seq.base ** level), level)
        logger.info(f"{describe(seq)}: exact value at x={format_rational(x)} from {level} terms")
        print(format_rational(value))
        return 0

    eps = parse_rational(run.params.get("eps", "1/1000000"), "eps")
    certified = eval_certified(seq, x, eps)
    logger.info(f"{describe(seq)}: certified value at x={format_rational(x)} with N={certified.level}")
    print(f"{format_decimal(certified.center, run.precision)} +/- {format_decimal(certified.radius, run.precision)}")
    if run.exact_column:
        print(f"{format_rational(certified.center)} +/- {format_rational(certified.radius)}")
    return 0


def cmd_psum(run: RunConfig) -> int:
    """Write H_n (or H_{n,m} when m is given) as an `x,y` CSV."""
    if "n" not in run.params:
        raise ConfigError("psum needs a level: pass --n")

    start_time = time.time()
    n = parse_int(run.params["n"], "n")
    m = run.params.get("m")

    if m is None:
        pl = build_partial_sum(run.sequence, n, run.mem_cap)
        filename = f"psum_n{n}.csv"
    else:
        m = parse_int(m, "m")
        pl = build_window_sum(run.sequence, n, m, run.mem_cap)
        filename = f"psum_n{n}_m{m}.csv"

    path = write_table(pl_table(pl, run.precision, run.exact_column), run.out_dir, filename)
    logger.info(f"Wrote {pl.intervals + 1} grid values to {path} in {time.time() - start_time:.2f} seconds")
    print(path)
    return 0
