import os
import sys
import time
from fractions import Fraction

import matplotlib
from matplotlib.figure import Figure
import pandas as pd

# Add project root to sys.path for import resolution
_PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', '..'))
if _PROJECT_ROOT not in sys.path:
    sys.path.insert(0, _PROJECT_ROOT)

from src.pipelines.resources.coefficients import describe, tail_bound
from src.pipelines.resources.common.common_functions import (
    format_decimal,
    parse_int,
    parse_rational,
    setup_logging,
    write_table,
)
from src.pipelines.resources.config_loader import config
from src.pipelines.resources.counting import make_strip
from src.pipelines.resources.takagi_core import build_partial_sum, certified_level, eval_pl, value_range
from src.pipelines.resources.takagi_schemas import RunConfig

logger = setup_logging("render_pipeline")

RENDER_COLUMNS = ["x", "f_lower", "f_upper", "h_n", "strip_lower", "strip_upper"]


def render_samples(run: RunConfig, n: int, samples_log2: int, eps: Fraction) -> pd.DataFrame:
    """
    Exact layers at x = j / 2^samples_log2.

    f is drawn as a band that contains the graph between samples too: on the two
    sample cells around x_j, f stays within H_N +- W_N with N the certified level
    for eps, so the band at x_j spans the range of H_N there, widened by W_N.
    H_n and the strip are exact at every sample.
    """
    seq = run.sequence
    strip = make_strip(seq, n, run.mem_cap)
    level = certified_level(seq, eps)
    fine = build_partial_sum(seq, level, run.mem_cap)
    width = tail_bound(seq, level)
    logger.debug(f"Render band uses H_{level} with half-width {width}")

    step = Fraction(1, 2 ** samples_log2)
    rows = []
    for j in range(2 ** samples_log2 + 1):
        x = j * step
        low, high = value_range(fine, (max(Fraction(0), x - step), min(Fraction(1), x + step)))
        center = eval_pl(strip.center, x)
        rows.append({
            "x": x,
            "f_lower": low - width,
            "f_upper": high + width,
            "h_n": center,
            "strip_lower": center - strip.halfwidth,
            "strip_upper": center + strip.halfwidth,
        })
    return pd.DataFrame(rows, columns=RENDER_COLUMNS)


def draw_figure(samples: pd.DataFrame, title: str, n: int, width: float, height: float) -> Figure:
    """Strip S_n shaded, H_n as a polyline, f as its certified band."""
    data = samples.astype(float)
    figure = Figure(figsize=(width, height))
    axes = figure.add_subplot()

    axes.fill_between(data["x"], data["strip_lower"], data["strip_upper"], color="tab:blue", alpha=0.25,
                      linewidth=0, label=f"$S_{{{n}}}$")
    axes.plot(data["x"], data["h_n"], color="tab:blue", linewidth=1.0, label=f"$H_{{{n}}}$")
    axes.fill_between(data["x"], data["f_lower"], data["f_upper"], facecolor="black", linewidth=0.6,
                      edgecolor="black", label="$f$")

    axes.set_xlim(0, 1)
    axes.set_title(title)
    axes.legend(loc="upper right")
    return figure


def cmd_render(run: RunConfig) -> int:
    """Write `<name>.svg` and the companion `<name>.csv` for the graph of f, H_n and S_n."""
    RENDER_CONFIG = config.get_render_config()
    params = run.params
    n = parse_int(params.get("n", RENDER_CONFIG.get("level", 4)), "n")
    samples_log2 = parse_int(params.get("samples_log2", RENDER_CONFIG.get("samples_log2", 12)), "samples_log2")
    eps = parse_rational(params.get("eps", RENDER_CONFIG.get("eps", "1/100000")), "eps")
    name = str(params.get("name") or f"render_n{n}")

    start_time = time.time()
    logger.info(f"Rendering {describe(run.sequence)} with n={n} on {2 ** samples_log2 + 1} samples")
    samples = render_samples(run, n, samples_log2, eps)

    printable = pd.DataFrame({
        column: [format_decimal(value, run.precision) for value in samples[column]] for column in RENDER_COLUMNS
    })
    csv_path = write_table(printable, run.out_dir, f"{name}.csv")

    figure = draw_figure(samples, describe(run.sequence), n,
                         float(RENDER_CONFIG.get("width_inches", 8)), float(RENDER_CONFIG.get("height_inches", 5)))
    svg_path = os.path.join(run.out_dir, f"{name}.svg")
    # Fixed hash salt and no date keep the SVG byte-identical across runs
    with matplotlib.rc_context({"svg.hashsalt": str(RENDER_CONFIG.get("hashsalt", "takagimesh"))}):
        figure.savefig(svg_path, format="svg", metadata={"Date": None})

    logger.info(f"Render finished in {time.time() - start_time:.2f} seconds")
    print(f"files: {svg_path} {csv_path}")
    return 0
