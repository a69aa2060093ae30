import argparse
import os
import sys
from functools import partial

# Add project root to sys.path for import resolution
_PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if _PROJECT_ROOT not in sys.path:
    sys.path.insert(0, _PROJECT_ROOT)

from pydantic import ValidationError

from src.pipelines.pipeline_dimension import cmd_dimension
from src.pipelines.pipeline_eval import cmd_eval, cmd_psum
from src.pipelines.pipeline_render import cmd_render
from src.pipelines.pipeline_verify import cmd_verify
from src.pipelines.resources.coefficients import sequence_from_mapping
from src.pipelines.resources.common.common_functions import (
    parse_int,
    resolve_output_dir,
    resolve_workers,
    setup_logging,
)
from src.pipelines.resources.config_loader import config, load_yaml_file
from src.pipelines.resources.takagi_errors import ConfigError, TakagiError
from src.pipelines.resources.takagi_schemas import RunConfig

COMMANDS = {
    "eval": cmd_eval,
    "psum": cmd_psum,
    "verify": cmd_verify,
    "boxdim": partial(cmd_dimension, mode="boxdim"),
    "assouad": partial(cmd_dimension, mode="assouad"),
    "render": cmd_render,
}

# Flag name -> key of the coefficient sequence interface
SEQUENCE_FLAGS = {"a": "a", "b": "base", "kind": "kind", "signs": "signs", "head": "head", "tail_ratio": "tail_ratio"}
SEQUENCE_KEYS = ("base", "kind", "a", "signs", "head", "tail_ratio")
RUN_KEYS = ("preset", "out_dir", "workers", "mem_cap", "seed", "precision", "exact")

COMMAND_FLAGS = {
    "eval": ("x", "eps"),
    "psum": ("n", "m"),
    "verify": ("n_max", "m_max", "property_level_max", "lipschitz_samples", "containment_samples"),
    "boxdim": ("n_min", "n_max", "refinement"),
    "assouad": ("n_list", "m_list", "x0_strategy", "sample_size", "refinement", "lower_only"),
    "render": ("n", "name", "samples_log2", "eps"),
}


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, default=None, help='Run file (flat YAML) with sequence keys and command parameters')
    common.add_argument('--out', type=str, default=None, help='Output directory')
    common.add_argument('--workers', type=int, default=None, help='Parallel workers (default: all available cores)')
    common.add_argument('--mem-cap', type=int, default=None, help='Maximum grid points per piecewise-linear function')
    common.add_argument('--seed', type=int, default=None, help='Seed for sampled window centers and property checks')
    common.add_argument('--preset', type=str, default=None, help='Named sequence from configs/config.yml (e.g. classical, signal)')
    common.add_argument('--a', type=str, default=None, help='Geometric ratio a as p/q')
    common.add_argument('--b', type=str, default=None, help='Base b >= 2')
    common.add_argument('--kind', type=str, default=None, choices=['geometric', 'signed_power', 'explicit'])
    common.add_argument('--signs', type=str, default=None, help='Sign rule: "alternating", "seeded:<u64>" or "1,-1,..."')
    common.add_argument('--head', type=str, default=None, help='Explicit head coefficients, comma separated p/q values')
    common.add_argument('--tail-ratio', type=str, default=None, help='Explicit tail ratio t in [0, 1)')
    common.add_argument('--precision', type=int, default=None, help='Decimal digits in CSV and reports')
    common.add_argument('--exact', action='store_true', default=None, help='Also emit exact p/q values')
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='takagimesh',
        description='takagimesh - certified evaluation, mesh counting and dimension estimates for Takagi-class graphs'
    )
    common = _common_flags()
    commands = parser.add_subparsers(dest='command', required=True)

    evaluate = commands.add_parser('eval', parents=[common], help='Evaluate f at a point')
    evaluate.add_argument('--x', type=str, default=None, help='Point in [0, 1] as p/q')
    evaluate.add_argument('--eps', type=str, default=None, help='Radius target for non b-adic points')

    psum = commands.add_parser('psum', parents=[common], help='Emit H_n or H_{n,m} as CSV')
    psum.add_argument('--n', type=str, default=None)
    psum.add_argument('--m', type=str, default=None)

    verify = commands.add_parser('verify', parents=[common], help='Run the lemma and theorem verification suites')
    verify.add_argument('--n-max', type=str, default=None)
    verify.add_argument('--m-max', type=str, default=None)
    verify.add_argument('--property-level-max', type=str, default=None)
    verify.add_argument('--lipschitz-samples', type=str, default=None)
    verify.add_argument('--containment-samples', type=str, default=None)

    boxdim = commands.add_parser('boxdim', parents=[common], help='Box-counting dimension fit')
    boxdim.add_argument('--n-min', type=str, default=None)
    boxdim.add_argument('--n-max', type=str, default=None)
    boxdim.add_argument('--refinement', type=str, default=None)

    assouad = commands.add_parser('assouad', parents=[common], help='Localized count profile and Assouad slope')
    assouad.add_argument('--n-list', type=str, default=None, help='e.g. "2,3,4" or "2..6"')
    assouad.add_argument('--m-list', type=str, default=None, help='e.g. "1..8"')
    assouad.add_argument('--x0-strategy', type=str, default=None, choices=['grid', 'sample'])
    assouad.add_argument('--sample-size', type=str, default=None)
    assouad.add_argument('--refinement', type=str, default=None)
    assouad.add_argument('--lower-only', action='store_true', default=None, help='Skip upper counts (allowed for infinite eta)')

    render = commands.add_parser('render', parents=[common], help='SVG of f, H_n and the strip S_n')
    render.add_argument('--n', type=str, default=None)
    render.add_argument('--name', type=str, default=None)
    render.add_argument('--samples-log2', type=str, default=None)
    render.add_argument('--eps', type=str, default=None)

    return parser


def _reject_floats(mapping: dict, source: str) -> None:
    for key, value in mapping.items():
        values = value if isinstance(value, list) else [value]
        if any(isinstance(v, float) for v in values):
            raise ConfigError(f"{source}: '{key}' is the YAML float {value!r}; quote it or write it as p/q")


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags, the run file and configs/config.yml (in that order of precedence)."""
    run_file = load_yaml_file(args.config) if args.config else {}
    _reject_floats(run_file, args.config or "run file")

    flags = {key: getattr(args, flag) for flag, key in SEQUENCE_FLAGS.items() if getattr(args, flag) is not None}
    given = {key: run_file[key] for key in SEQUENCE_KEYS if key in run_file}

    preset_name = args.preset or run_file.get("preset")
    if preset_name is None and not flags and not given:
        preset_name = "classical"
    mapping = config.get_preset(preset_name) if preset_name else {}
    mapping.update(given)
    mapping.update(flags)
    sequence = sequence_from_mapping(mapping)

    params = config.get_experiment_config(args.command)
    params.update({key: value for key, value in run_file.items() if key not in SEQUENCE_KEYS + RUN_KEYS})
    params.update({key: getattr(args, key) for key in COMMAND_FLAGS[args.command] if getattr(args, key) is not None})

    LIMITS_CONFIG = config.get_limits_config()
    OUTPUT_CONFIG = config.get_output_config()

    def pick(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        return run_file.get(key, default)

    try:
        return RunConfig(
            sequence=sequence,
            out_dir=resolve_output_dir(pick(args.out, "out_dir", None)),
            workers=resolve_workers(pick(args.workers, "workers", None)),
            mem_cap=parse_int(pick(args.mem_cap, "mem_cap", LIMITS_CONFIG.get("mem_cap")), "mem_cap"),
            cell_budget=parse_int(LIMITS_CONFIG.get("cell_budget"), "cell_budget"),
            seed=parse_int(pick(args.seed, "seed", params.get("seed", 0)), "seed"),
            precision=parse_int(pick(args.precision, "precision", OUTPUT_CONFIG.get("decimal_precision", 12)), "precision"),
            exact_column=bool(pick(args.exact, "exact", OUTPUT_CONFIG.get("exact_column", False))),
            params=params,
        )
    except ValidationError as e:
        raise ConfigError(f"Invalid run configuration: {e}")


def main(argv=None) -> int:
    """Main entry point for takagimesh."""
    parser = build_parser()
    args = parser.parse_args(argv)

    logger = setup_logging("takagimesh")
    setup_logging("src")

    try:
        run = build_run_config(args)
        logger.info(f"--- Starting {args.command} ---")
        return COMMANDS[args.command](run)
    except TakagiError as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
