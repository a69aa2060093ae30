# Import pydantic
from fractions import Fraction
from typing import Annotated, Any, Dict, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, field_validator, model_validator

from src.pipelines.resources.common.common_functions import format_rational, parse_rational

# Exact rational field: parsed from 'p/q' / ints / decimal strings, floats rejected
Rational = Annotated[Fraction, BeforeValidator(parse_rational), PlainSerializer(format_rational, return_type=str)]


class Record(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


# Coefficient sequence kinds
class GeometricKind(Record):
    name: Literal["geometric"] = "geometric"
    ratio: Rational

    @field_validator("ratio")
    @classmethod
    def _ratio_in_unit_interval(cls, value):
        if not 0 < value < 1:
            raise ValueError(f"geometric ratio must satisfy 0 < a < 1, got {value}")
        return value


class SignRule(Record):
    mode: Literal["literal", "alternating", "seeded"]
    values: Tuple[int, ...] = ()
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _consistent(self):
        if self.mode == "literal":
            if not self.values or any(v not in (1, -1) for v in self.values):
                raise ValueError("literal sign lists must be non-empty and contain only +1/-1")
        if self.mode == "seeded" and (self.seed is None or self.seed < 0):
            raise ValueError("seeded sign rules need a non-negative integer seed")
        return self


class SignedPowerKind(Record):
    name: Literal["signed_power"] = "signed_power"
    signs: SignRule


class ExplicitKind(Record):
    name: Literal["explicit"] = "explicit"
    head: Tuple[Rational, ...] = ()
    tail_ratio: Rational = Fraction(0)

    @field_validator("tail_ratio")
    @classmethod
    def _tail_in_range(cls, value):
        if not 0 <= value < 1:
            raise ValueError(f"tail_ratio must lie in [0, 1), got {value}")
        return value


class CoefficientSequence(Record):
    base: int = Field(ge=2)
    kind: Annotated[Union[GeometricKind, SignedPowerKind, ExplicitKind], Field(discriminator="name")]


class EtaCertificate(Record):
    # value None marks the Infinite certificate
    value: Optional[Rational] = None
    attained_sup: Optional[Rational] = None

    @property
    def is_finite(self) -> bool:
        return self.value is not None

    @model_validator(mode="after")
    def _at_least_one(self):
        if self.value is not None and self.value < 1:
            raise ValueError("eta is at least 1 when finite")
        return self


class PiecewiseLinearFunction(Record):
    """Exact values on the grid j / (2 b^level), j = 0..2 b^level, over one shared denominator."""
    base: int = Field(ge=2)
    level: int = Field(ge=0)
    numerators: np.ndarray
    denominator: int = Field(gt=0)

    @model_validator(mode="after")
    def _grid_size(self):
        expected = 2 * self.base ** self.level + 1
        if len(self.numerators) != expected:
            raise ValueError(f"expected {expected} grid values, got {len(self.numerators)}")
        self.numerators.flags.writeable = False
        return self

    @property
    def intervals(self) -> int:
        return 2 * self.base ** self.level

    @property
    def values(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(int(v), self.denominator) for v in self.numerators)

    def value_at(self, j: int) -> Fraction:
        return Fraction(int(self.numerators[j]), self.denominator)

    def grid_point(self, j: int) -> Fraction:
        return Fraction(j, self.intervals)


class CertifiedValue(Record):
    center: Rational
    radius: Rational
    level: int = 0

    @field_validator("radius")
    @classmethod
    def _non_negative(cls, value):
        if value < 0:
            raise ValueError("radius must be non-negative")
        return value

    @property
    def lower(self) -> Fraction:
        return self.center - self.radius

    @property
    def upper(self) -> Fraction:
        return self.center + self.radius

    def contains(self, value) -> bool:
        return self.lower <= Fraction(value) <= self.upper


class Strip(Record):
    center: PiecewiseLinearFunction
    halfwidth: Rational
    n: int = Field(ge=0)


class CountWindow(Record):
    """Rectangle (x_lo, x_hi] x [y_lo, y_hi], half-open in x like the mesh; x_lo = 0 is included."""
    x_lo: Rational
    x_hi: Rational
    y_lo: Rational
    y_hi: Rational

    @model_validator(mode="after")
    def _ordered(self):
        if self.x_lo > self.x_hi or self.y_lo > self.y_hi:
            raise ValueError("window bounds must be ordered")
        return self


class WindowSpec(Record):
    n: int = Field(ge=0)
    m: int = Field(ge=1)
    i: int = Field(ge=1)
    y_center: Rational

    def rectangle(self, base: int, eta: Fraction) -> CountWindow:
        width = Fraction(1, base ** self.n)
        return CountWindow(
            x_lo=(self.i - 1) * width,
            x_hi=self.i * width,
            y_lo=self.y_center - eta * width,
            y_hi=self.y_center + eta * width,
        )


class RestrictedDomain(Record):
    n: int
    i: int
    # One (possibly empty) interval per half column J1, J2
    halves: Tuple[Optional[Tuple[Rational, Rational]], Optional[Tuple[Rational, Rational]]]

    @property
    def intervals(self) -> Tuple[Tuple[Fraction, Fraction], ...]:
        return tuple(piece for piece in self.halves if piece is not None)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def measure(self) -> Fraction:
        return sum((hi - lo for lo, hi in self.intervals), Fraction(0))


class CountBounds(Record):
    lower: int
    upper: int
    base: int
    level: int
    region: Optional[CountWindow] = None

    @model_validator(mode="after")
    def _sandwich(self):
        if self.lower > self.upper:
            raise ValueError(f"lower count {self.lower} exceeds upper count {self.upper}")
        return self

    @property
    def scale(self) -> Fraction:
        return Fraction(1, self.base ** self.level)


class LemmaKeyCheck(Record):
    n: int
    m: int
    i: int
    y: Rational
    count: int
    bound: int
    ok: bool


class LocalizedCount(Record):
    x0: Rational
    n: int
    m: int
    bounds: CountBounds
    theorem_bound: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.theorem_bound is None or self.bounds.upper <= self.theorem_bound


class DimensionEstimate(Record):
    slope: float
    intercept: float
    residual_rms: float
    points: Tuple[Tuple[float, float], ...]

    @model_validator(mode="after")
    def _enough_points(self):
        if len(self.points) < 3:
            raise ValueError("a dimension estimate needs at least 3 points")
        if not np.isfinite(self.slope) or self.residual_rms < 0:
            raise ValueError("slope must be finite and residual non-negative")
        return self


class BoxDimensionFit(Record):
    estimate: DimensionEstimate
    lower: DimensionEstimate
    upper: DimensionEstimate
    counts: Tuple[CountBounds, ...]
    reference: Optional[float] = None


class ProfileRow(Record):
    base: int = Field(ge=2)
    n: int
    m: int
    max_lower: int
    max_upper: Optional[int] = None
    bound: Optional[int] = None
    windows: int


class SegmentWalkResult(Record):
    cells: frozenset
    count: int

    @model_validator(mode="after")
    def _count_matches(self):
        if self.count != len(self.cells):
            raise ValueError("count must equal the number of visited cells")
        return self


class RunConfig(Record):
    sequence: CoefficientSequence
    out_dir: str
    workers: int = 1
    mem_cap: int
    cell_budget: int
    seed: int = 0
    precision: int = 12
    exact_column: bool = False
    params: Dict[str, Any] = Field(default_factory=dict)
