import logging
import math
import os
import sys
from fractions import Fraction
from numbers import Rational


from src.pipelines.resources.config_loader import config
from src.pipelines.resources.takagi_errors import InvalidInputError


def setup_logging(name):
    """Set up logging configuration."""
    logger = logging.getLogger(name)
    LOGGING_CONFIG = config.get_logging_config()
    logger.setLevel(getattr(logging, LOGGING_CONFIG.get('level', 'INFO')))

    # Only one handler per logger, pipelines may be invoked repeatedly in one process
    if logger.handlers:
        return logger

    stream = sys.stdout if LOGGING_CONFIG.get('stream', 'stderr') == 'stdout' else sys.stderr
    handler = logging.StreamHandler(stream)
    handler.setLevel(getattr(logging, LOGGING_CONFIG.get('level', 'INFO')))

    formatter = logging.Formatter(LOGGING_CONFIG.get('format', '%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
    handler.setFormatter(formatter)

    logger.addHandler(handler)
    return logger


def parse_rational(value, field="value"):
    """Parse an exact rational from 'p/q', an integer, or an exact decimal string.

    Python floats are refused: every downstream count has to be exact.
    """
    if isinstance(value, bool):
        raise InvalidInputError(f"{field}: expected a rational, got a boolean")

    if isinstance(value, float):
        raise InvalidInputError(
            f"{field}: floating-point input {value!r} is not accepted; write it as a quoted string or as p/q"
        )

    if isinstance(value, (int, Rational)):
        return Fraction(value)

    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise InvalidInputError(f"{field}: cannot parse {value!r} as a rational")

    raise InvalidInputError(f"{field}: unsupported type {type(value).__name__}")


def format_rational(value):
    """Render a rational as 'p/q' (or 'p' for integers)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_decimal(value, precision):
    """Render a rational as a decimal rounded half-even at `precision` digits, exactly."""
    scaled = round(Fraction(value) * 10 ** precision)
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(precision + 1, "0")
    if precision == 0:
        return f"{sign}{digits}"
    return f"{sign}{digits[:-precision]}.{digits[-precision:]}"


def b_adic_level(x, base):
    """Smallest k with x * base**k an integer, or None if x is not b-adic."""
    denominator = Fraction(x).denominator

    # Any prime of the denominator not dividing the base rules x out
    rest = denominator
    while rest != 1:
        common = math.gcd(rest, base)
        if common == 1:
            return None
        rest //= common

    level, power = 0, 1
    while power % denominator:
        power *= base
        level += 1
    return level


def resolve_output_dir(cli_value=None):
    """Output directory: flag, then the environment override, then config."""
    if cli_value:
        return cli_value

    RUNTIME_CONFIG = config.get_runtime_config()
    env_name = RUNTIME_CONFIG.get('out_dir_env', 'TAKAGI_OUT_DIR')
    return os.environ.get(env_name) or RUNTIME_CONFIG.get('out_dir', 'output')


def resolve_workers(cli_value=None):
    """Worker count: flag, then config, then every available core."""
    if cli_value:
        return int(cli_value)

    configured = config.get_runtime_config().get('workers')
    if configured:
        return int(configured)
    return os.cpu_count() or 1


def parse_int(value, field="value"):
    """Parse an integer parameter from an int or a decimal string; floats and booleans are refused."""
    if isinstance(value, bool) or isinstance(value, float):
        raise InvalidInputError(f"{field}: expected an integer, got {value!r}")
    try:
        return int(str(value).strip())
    except ValueError:
        raise InvalidInputError(f"{field}: cannot parse {value!r} as an integer")


def parse_int_list(value, field="value"):
    """Integer list from a YAML list, a comma list '1,2,3' or a range '1..8'."""
    if isinstance(value, (list, tuple)):
        return [parse_int(v, field) for v in value]

    text = str(value).strip()
    if ".." in text:
        start, stop = text.split("..", 1)
        return list(range(parse_int(start, field), parse_int(stop, field) + 1))
    return [parse_int(part, field) for part in text.split(",") if part.strip()]


def write_table(frame, out_dir, filename):
    """Write a pandas table as CSV under out_dir and return its path."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, filename)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path
