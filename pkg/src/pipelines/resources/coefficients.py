"""Coefficient sequences c = {c_k} of the Takagi class, the constant eta and tail bounds.

eta is computed as max{1, sup_k b^k |c_k|} rather than with a limsup: the strip
containment |f - H_n| <= eta * b^-n needs |c_k| <= eta * b^-k for every k >= n,
not only eventually.
"""
import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Any, List, Mapping

import numpy as np
from pydantic import ValidationError

from src.pipelines.resources.common.common_functions import parse_rational
from src.pipelines.resources.config_loader import config
from src.pipelines.resources.takagi_errors import ConfigError, InvalidInputError
from src.pipelines.resources.takagi_schemas import (
    CoefficientSequence,
    EtaCertificate,
    ExplicitKind,
    GeometricKind,
    SignedPowerKind,
    SignRule,
)

logger = logging.getLogger(__name__)


# Constructors
def geometric(a, base=2) -> CoefficientSequence:
    return _build(base=base, kind=GeometricKind(ratio=parse_rational(a, "a")))


def signed_power(signs="alternating", base=2) -> CoefficientSequence:
    return _build(base=base, kind=SignedPowerKind(signs=parse_sign_rule(signs)))


def explicit(head=(), tail_ratio=0, base=2) -> CoefficientSequence:
    parsed_head = tuple(parse_rational(value, f"head[{index}]") for index, value in enumerate(head))
    return _build(base=base, kind=ExplicitKind(head=parsed_head, tail_ratio=parse_rational(tail_ratio, "tail_ratio")))


def _build(**fields) -> CoefficientSequence:
    try:
        return CoefficientSequence(**fields)
    except ValidationError as e:
        raise InvalidInputError(f"Invalid coefficient sequence: {e}")


def parse_sign_rule(signs) -> SignRule:
    """Sign rule from a literal list, 'alternating' or 'seeded:<u64>'."""
    try:
        if isinstance(signs, SignRule):
            return signs

        if isinstance(signs, (list, tuple)):
            return SignRule(mode="literal", values=tuple(int(s) for s in signs))

        text = str(signs).strip().lower()
        if text == "alternating":
            return SignRule(mode="alternating")

        if text.startswith("seeded:"):
            return SignRule(mode="seeded", seed=int(text.split(":", 1)[1]))

        # Comma separated literal list, e.g. "1,-1,-1"
        return SignRule(mode="literal", values=tuple(int(s) for s in text.split(",")))

    except (ValueError, ValidationError) as e:
        raise InvalidInputError(f"Invalid sign rule {signs!r}: {e}")


def sequence_from_mapping(mapping: Mapping[str, Any]) -> CoefficientSequence:
    """
    Build a sequence from the flat key-value interface.

    Args:
        mapping: keys base, kind, a, signs, head, tail_ratio

    Returns:
        The parsed CoefficientSequence
    """
    base = mapping.get("base", 2)
    if isinstance(base, bool) or not isinstance(base, (int, str)):
        raise InvalidInputError(f"base must be an integer, got {base!r}")
    try:
        base = int(base)
    except ValueError:
        raise InvalidInputError(f"base must be an integer, got {base!r}")

    kind = str(mapping.get("kind", "geometric")).strip().lower()
    if kind == "geometric":
        if "a" not in mapping:
            raise ConfigError("geometric sequences need the key 'a'")
        return geometric(mapping["a"], base)

    if kind in ("signed_power", "signedpower", "signal"):
        return signed_power(mapping.get("signs", "alternating"), base)

    if kind == "explicit":
        head = mapping.get("head", ()) or ()
        if isinstance(head, str):
            head = [part for part in head.split(",") if part.strip()]
        return explicit(head, mapping.get("tail_ratio", 0), base)

    raise ConfigError(f"Unknown sequence kind '{kind}'")


def preset(name: str) -> CoefficientSequence:
    """Named sequence from the presets section of the configuration."""
    return sequence_from_mapping(config.get_preset(name))


# Signs of signed-power sequences
@lru_cache(maxsize=64)
def _seeded_block(seed: int, size: int) -> np.ndarray:
    # Generator.random consumes one 64-bit draw per value, so blocks are prefix-stable
    draws = np.random.default_rng(seed).random(size)
    return np.where(draws < 0.5, 1, -1)


def sign(rule: SignRule, k: int) -> int:
    if rule.mode == "alternating":
        return -1 if k % 2 else 1

    if rule.mode == "literal":
        return rule.values[k % len(rule.values)]

    size = 1 << max(6, (k + 1).bit_length())
    return int(_seeded_block(rule.seed, size)[k])


# Terms
def coeff(seq: CoefficientSequence, k: int) -> Fraction:
    """c_k as an exact rational."""
    if k < 0:
        raise InvalidInputError(f"coefficient index must be non-negative, got {k}")

    kind = seq.kind
    if isinstance(kind, GeometricKind):
        return kind.ratio ** k

    if isinstance(kind, SignedPowerKind):
        return Fraction(sign(kind.signs, k), seq.base ** k)

    head = kind.head
    if k < len(head):
        return head[k]
    if not head:
        return Fraction(0)
    return head[-1] * kind.tail_ratio ** (k - len(head) + 1)


def coefficients(seq: CoefficientSequence, n: int) -> List[Fraction]:
    """c_0 .. c_{n-1}."""
    return [coeff(seq, k) for k in range(n)]


def coeff_denominator(seq: CoefficientSequence, n: int) -> int:
    """Least common denominator of c_0 .. c_{n-1} (1 for n = 0)."""
    return math.lcm(1, *(c.denominator for c in coefficients(seq, n)))


def eta(seq: CoefficientSequence) -> EtaCertificate:
    """max{1, sup_k b^k |c_k|}, or the Infinite certificate."""
    b = seq.base
    kind = seq.kind

    if isinstance(kind, GeometricKind):
        growth = kind.ratio * b
        if growth > 1:
            return EtaCertificate()
        # (ab)^k is non-increasing, the sup is the k = 0 term
        return EtaCertificate(value=Fraction(1), attained_sup=Fraction(1))

    if isinstance(kind, SignedPowerKind):
        return EtaCertificate(value=Fraction(1), attained_sup=Fraction(1))

    head = kind.head
    head_sup = max((b ** k * abs(h) for k, h in enumerate(head)), default=Fraction(0))
    tail_sup = Fraction(0)
    if head and head[-1] != 0 and kind.tail_ratio != 0:
        growth = b * kind.tail_ratio
        if growth > 1:
            return EtaCertificate()
        # b^k |c_k| = b^(K-1) |h_(K-1)| (bt)^(k-K+1), largest at k = K
        tail_sup = b ** (len(head) - 1) * abs(head[-1]) * growth

    sup = max(head_sup, tail_sup)
    return EtaCertificate(value=max(Fraction(1), sup), attained_sup=sup)


def abs_sum_bound(seq: CoefficientSequence) -> Fraction:
    """Exact value of sum_k |c_k| (finite for every kind)."""
    kind = seq.kind
    if isinstance(kind, GeometricKind):
        return 1 / (1 - kind.ratio)

    if isinstance(kind, SignedPowerKind):
        return Fraction(seq.base, seq.base - 1)

    total = sum((abs(h) for h in kind.head), Fraction(0))
    if kind.head:
        total += abs(kind.head[-1]) * kind.tail_ratio / (1 - kind.tail_ratio)
    return total


def _half_tail_sum(seq: CoefficientSequence, n: int) -> Fraction:
    # (1/2) sum_{k >= n} |c_k| in closed form
    kind = seq.kind
    if isinstance(kind, GeometricKind):
        return kind.ratio ** n / (2 * (1 - kind.ratio))

    if isinstance(kind, SignedPowerKind):
        return Fraction(seq.base, 2 * (seq.base - 1) * seq.base ** n)

    head = kind.head
    total = sum((abs(h) for h in head[n:]), Fraction(0)) / 2
    if head and head[-1] != 0:
        t = kind.tail_ratio
        first = max(n, len(head)) - len(head) + 1
        total += abs(head[-1]) * t ** first / (2 * (1 - t))
    return total


def tail_bound(seq: CoefficientSequence, n: int) -> Fraction:
    """
    Half-width W_n with |f(x) - H_n(x)| <= W_n for every x.

    Args:
        seq: coefficient sequence
        n: number of summed terms

    Returns:
        min((1/2) sum_{k>=n} |c_k|, eta * b^-n), the second term only when eta is finite
    """
    if n < 0:
        raise InvalidInputError(f"tail index must be non-negative, got {n}")

    bound = _half_tail_sum(seq, n)
    certificate = eta(seq)
    if certificate.is_finite:
        bound = min(bound, certificate.value / seq.base ** n)
    return bound


def describe(seq: CoefficientSequence) -> str:
    """Short human label used in logs and reports."""
    kind = seq.kind
    if isinstance(kind, GeometricKind):
        return f"geometric(a={kind.ratio}, b={seq.base})"
    if isinstance(kind, SignedPowerKind):
        rule = kind.signs
        detail = rule.mode if rule.mode != "seeded" else f"seeded:{rule.seed}"
        if rule.mode == "literal":
            detail = ",".join(str(v) for v in rule.values)
        return f"signed_power(signs={detail}, b={seq.base})"
    head = ",".join(str(h) for h in kind.head)
    return f"explicit(head=[{head}], tail_ratio={kind.tail_ratio}, b={seq.base})"
