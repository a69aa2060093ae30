import math
from fractions import Fraction

import pytest

from src.pipelines.resources.coefficients import geometric
from src.pipelines.resources.counting import count_bounds
from src.pipelines.resources.dimension import (
    assouad_profile,
    assouad_slope,
    box_dimension_fit,
    fit_line,
    profile_table,
    slope_ceiling,
    theoretical_box_dimension,
    x0_candidates,
)
from src.pipelines.resources.takagi_errors import InfiniteEtaError, InsufficientDataError, InvalidInputError
from src.pipelines.resources.takagi_schemas import ProfileRow


def test_fit_line_recovers_a_line():
    estimate = fit_line([0, 1, 2, 3], [1, 3, 5, 7])
    assert estimate.slope == pytest.approx(2)
    assert estimate.intercept == pytest.approx(1)
    assert estimate.residual_rms == pytest.approx(0, abs=1e-12)


def test_fit_line_needs_three_points():
    with pytest.raises(InsufficientDataError):
        fit_line([0, 1], [0, 1])


def test_theoretical_box_dimension(classical, steep, signal):
    assert theoretical_box_dimension(classical) == 1
    assert theoretical_box_dimension(signal) == 1
    assert theoretical_box_dimension(steep) == pytest.approx(2 + math.log(0.7) / math.log(2))


def test_zero_function_box_slope(zero):
    fit = box_dimension_fit(zero, 2, 6)
    assert fit.estimate.slope == pytest.approx(1)
    assert fit.lower.slope == pytest.approx(1)
    assert fit.upper.slope == pytest.approx(1)
    assert [c.upper for c in fit.counts] == [2 ** N for N in range(2, 7)]


def test_box_fit_range(classical):
    with pytest.raises(InsufficientDataError):
        box_dimension_fit(classical, 4, 5)


def test_box_fit_counts_bracket(classical):
    fit = box_dimension_fit(classical, 2, 5, workers=2)
    assert all(c.lower <= c.upper for c in fit.counts)
    assert fit.lower.slope <= fit.upper.slope + 0.5


def test_x0_candidates(classical):
    assert x0_candidates(classical, 2, 3) == [Fraction(j, 4) for j in range(5)]

    sample = x0_candidates(classical, 3, 5, "sample", sample_size=16, seed=4)
    assert sample == x0_candidates(classical, 3, 5, "sample", sample_size=16, seed=4)
    assert len(sample) <= 16
    assert all((x * 2 ** 8).denominator == 1 for x in sample)

    # Fewer grid points than the sample size: take them all
    assert len(x0_candidates(classical, 1, 1, "sample", sample_size=64)) == 5

    with pytest.raises(InvalidInputError):
        x0_candidates(classical, 1, 1, "everywhere")


def test_profile_at_full_scale_matches_global_counts(classical):
    profile = assouad_profile(classical, [0], [2, 3, 4])
    for row in profile:
        whole = count_bounds(classical, row.m, refinement=2)
        assert (row.max_lower, row.max_upper) == (whole.lower, whole.upper)
        assert row.windows == 2


def test_zero_function_profile(zero):
    profile = assouad_profile(zero, [1, 2], [1, 2, 3])
    best = {m: max(r.max_upper for r in profile if r.m == m) for m in (1, 2, 3)}
    # n = 1, x0 = 1/2 covers all 2 b^m columns; every column holds one cell
    assert best == {m: 2 ** (m + 1) for m in (1, 2, 3)}
    assert assouad_slope(profile).slope == pytest.approx(1)
    assert assouad_slope(profile, "lower").slope == pytest.approx(1)


def test_profile_needs_finite_eta_for_upper_counts(steep):
    with pytest.raises(InfiniteEtaError):
        assouad_profile(steep, [1], [1, 2, 3])

    profile = assouad_profile(steep, [1], [1, 2, 3], upper=False)
    assert all(row.max_upper is None and row.bound is None for row in profile)
    assert assouad_slope(profile, "lower").slope > 0
    with pytest.raises(InsufficientDataError):
        assouad_slope(profile, "upper")


def test_slope_needs_three_scales(classical):
    profile = assouad_profile(classical, [1], [1, 2])
    with pytest.raises(InsufficientDataError):
        assouad_slope(profile)


def test_profile_ignores_worker_count(signal):
    one = assouad_profile(signal, [1, 2], [1, 2], "sample", 8, seed=3, workers=1)
    two = assouad_profile(signal, [1, 2], [1, 2], "sample", 8, seed=3, workers=2)
    assert one == two


def test_slope_ceiling():
    assert slope_ceiling(1, 8, 2) == pytest.approx(1 + math.log2(66) / 8)


def test_profile_table(classical, steep):
    table = profile_table(assouad_profile(classical, [1, 2], [1, 2, 3]), classical)
    assert list(table.columns) == ["m", "max_lower", "max_upper", "bound"]
    assert table["bound"].tolist() == [90, 192, 408]

    lower_only = profile_table(assouad_profile(steep, [1], [1, 2, 3], upper=False), steep)
    assert set(lower_only["bound"]) == {""}


def test_slope_uses_the_base():
    rows = [ProfileRow(base=10, n=1, m=m, max_lower=10 ** m, max_upper=10 ** m, windows=1) for m in (1, 2, 3)]
    assert assouad_slope(rows).slope == pytest.approx(1)


@pytest.mark.slow
def test_classical_box_dimension(classical):
    fit = box_dimension_fit(classical, 6, 14, workers=2)
    assert 0.95 <= fit.estimate.slope <= 1.08


@pytest.mark.slow
def test_van_der_waerden_box_dimension(van_der_waerden):
    fit = box_dimension_fit(van_der_waerden, 2, 5, workers=2)
    assert 0.95 <= fit.estimate.slope <= 1.08


@pytest.mark.slow
def test_steep_box_dimension(steep):
    fit = box_dimension_fit(steep, 6, 16, workers=2)
    assert abs(fit.estimate.slope - theoretical_box_dimension(steep)) <= 0.10


@pytest.mark.slow
def test_classical_assouad_slope(classical):
    profile = assouad_profile(classical, range(2, 7), range(1, 9), workers=2)
    upper = assouad_slope(profile, "upper")
    assert 0.90 <= upper.slope <= 1.12
    assert upper.slope <= slope_ceiling(1, 8, 2)


@pytest.mark.slow
def test_steep_localized_counts_grow_faster(classical):
    steep = geometric("7/10", 2)
    steep_lower = assouad_slope(assouad_profile(steep, range(2, 7), range(1, 9), upper=False, workers=2), "lower")
    classical_lower = assouad_slope(
        assouad_profile(classical, range(2, 7), range(1, 9), upper=False, workers=2), "lower"
    )
    assert steep_lower.slope >= 1.2
    assert steep_lower.slope - classical_lower.slope >= 0.15


@pytest.mark.slow
@pytest.mark.parametrize("fixture", ["classical", "signal"])
def test_box_fit_bounds_pinch_at_fine_scales(fixture, request):
    seq = request.getfixturevalue(fixture)
    fit = box_dimension_fit(seq, 6, 12, workers=2)
    assert fit.lower.slope <= fit.upper.slope + 0.05
