from fractions import Fraction

import numpy as np
import pytest

from src.pipelines.resources.coefficients import eta, explicit, signed_power, tail_bound
from src.pipelines.resources.counting import (
    GraphSamples,
    WindowCounter,
    _window_strip_count,
    column_counts,
    connected_lower_count,
    count_bounds,
    graph_point_lower_count,
    lemma_bound,
    lemma_table,
    lemma_y_centers,
    localized_count,
    localized_window,
    make_strip,
    restricted_domain,
    scan_table,
    strip_extents,
    strip_mesh_count,
    theorem_bound,
    theorem_scan,
    verify_lemma_exhaustive,
    verify_lemma_key,
)
from src.pipelines.resources.takagi_core import build_partial_sum, eval_exact, eval_pl
from src.pipelines.resources.takagi_errors import InfiniteEtaError, InvalidInputError
from src.pipelines.resources.takagi_schemas import CountWindow, Strip
from tests.conftest import small_sequences


def test_bounds():
    assert lemma_bound(Fraction(1), 3, 2) == 136
    assert lemma_bound(Fraction(1), 1, 2) == 30
    assert theorem_bound(Fraction(1), 4, 2) == 864


def test_make_strip(classical, steep, triangle):
    assert make_strip(classical, 4).halfwidth == Fraction(1, 16)
    assert make_strip(steep, 4).halfwidth == Fraction(2401, 6000)
    assert make_strip(triangle, 1).halfwidth == 0


def test_zero_function_strip(zero):
    assert strip_mesh_count(make_strip(zero, 3), 3) == 8


def test_level_zero_strip(classical):
    # y in [-1, 1] over the single column
    assert strip_mesh_count(make_strip(classical, 0), 0) == 3


def test_scale_finer_than_strip_level(classical):
    with pytest.raises(InvalidInputError):
        strip_mesh_count(make_strip(classical, 4), 3)


def test_graph_points_example(classical):
    # (0,0) and (1/2,1/2) share the upper-right closed cell of column 0; (1,0) is in column 1
    assert graph_point_lower_count(classical, 1) == 2


@pytest.mark.parametrize("N", [0, 2, 5])
def test_zero_function_counts(zero, N):
    assert graph_point_lower_count(zero, N) == 2 ** N
    assert connected_lower_count(zero, N, refinement=1) == 2 ** N
    assert count_bounds(zero, N).upper == 2 ** N


@pytest.mark.parametrize("seq", small_sequences())
def test_lower_counts_grow_with_refinement(seq):
    N = 3
    points = [graph_point_lower_count(seq, N, refinement=q) for q in range(4)]
    connected = [connected_lower_count(seq, N, refinement=q) for q in range(4)]
    upper = strip_mesh_count(make_strip(seq, N), N)
    assert points == sorted(points)
    assert connected == sorted(connected)
    assert all(p <= c <= upper for p, c in zip(points, connected))


@pytest.mark.parametrize("seq", small_sequences())
@pytest.mark.parametrize("N", [1, 3, 5])
def test_columns_add_up(seq, N):
    strip = make_strip(seq, N)
    counts = column_counts(strip, N)
    assert len(counts) == seq.base ** N
    assert int(np.sum(counts)) == strip_mesh_count(strip, N)


@pytest.mark.parametrize("seed", range(4))
def test_strip_count_monotone_in_halfwidth(classical, seed):
    rng = np.random.default_rng(seed)
    center = build_partial_sum(classical, 3)
    widths = sorted(Fraction(int(k), 64) for k in rng.integers(0, 64, size=3))
    counts = [strip_mesh_count(Strip(center=center, halfwidth=w, n=3), 5) for w in widths]
    assert counts == sorted(counts)


@pytest.mark.parametrize("seq", small_sequences())
def test_graph_points_lie_in_every_strip(seq):
    N = 6 if seq.base == 2 else 4
    for n in range(N + 1):
        Hn = build_partial_sum(seq, n)
        width = tail_bound(seq, n)
        for j in range(0, seq.base ** N + 1, 3):
            x = Fraction(j, seq.base ** N)
            assert abs(eval_exact(seq, j, N) - eval_pl(Hn, x)) <= width


def test_restricted_domain_examples(classical, zero):
    H2 = build_partial_sum(classical, 2)
    domain = restricted_domain(H2, 1, Fraction(1, 4), 1)
    assert domain.halves == ((0, Fraction(1, 8)), (Fraction(1, 8), Fraction(1, 4)))

    # |2x - 1| <= 1/2 only at x = 1/4 in the first column
    domain = restricted_domain(H2, 1, 1, 1)
    assert domain.halves == (None, (Fraction(1, 4), Fraction(1, 4)))
    assert domain.measure == 0

    assert restricted_domain(H2, 2, 10, 1).is_empty
    assert restricted_domain(build_partial_sum(zero, 0), 1, 0, 1).measure == 1

    with pytest.raises(InvalidInputError):
        restricted_domain(H2, 5, 0, 1)


def test_lemma_key_examples(classical):
    check = verify_lemma_key(classical, 2, 3, 1, Fraction(1, 4))
    assert check.bound == 136
    assert check.ok

    check = verify_lemma_key(classical, 0, 1, 1, 0)
    assert check.bound == 30
    assert check.ok


def test_lemma_key_needs_finite_eta(steep):
    with pytest.raises(InfiniteEtaError):
        verify_lemma_key(steep, 1, 1, 1, 0)
    with pytest.raises(InfiniteEtaError):
        verify_lemma_exhaustive(steep, 1, 1)


def test_lemma_y_centers(classical):
    H1 = build_partial_sum(classical, 1)
    # values 0, 1/4, 1/2 on column 1, shifted by +-1/2
    centers = lemma_y_centers(H1, 1, Fraction(1))
    assert centers[0] == Fraction(-1, 2)
    assert centers[-1] == 1
    assert Fraction(1, 4) in centers


@pytest.mark.parametrize("seq", small_sequences())
def test_exhaustive_sweep_matches_single_checks(seq):
    rows = verify_lemma_exhaustive(seq, 2, 2)
    assert all(row.ok for row in rows)
    assert {(row.n, row.m) for row in rows} == {(n, m) for n in range(3) for m in (1, 2)}

    rng = np.random.default_rng(11)
    for index in rng.integers(0, len(rows), size=8).tolist():
        row = rows[index]
        assert verify_lemma_key(seq, row.n, row.m, row.i, row.y).count == row.count


def test_exhaustive_sweep_ignores_worker_count(signal):
    assert verify_lemma_exhaustive(signal, 2, 2, workers=1) == verify_lemma_exhaustive(signal, 2, 2, workers=2)


def test_localized_examples(classical):
    bounds = localized_count(classical, Fraction(1, 2), 2, 4)
    assert bounds.lower <= bounds.upper <= 864

    # The graph near 0 rises with slope about m, so it meets at least b^m / 2 cells
    assert localized_count(classical, 0, 3, 3).lower >= 4


def test_localized_window_at_full_scale_is_the_whole_graph(classical):
    for m in (2, 3, 4):
        local = localized_count(classical, 0, 0, m)
        whole = count_bounds(classical, m, refinement=2)
        assert (local.lower, local.upper) == (whole.lower, whole.upper)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_zero_function_window_columns(zero, m):
    # x-range (1/4, 3/4] is exactly 2 b^m columns
    bounds = localized_count(zero, Fraction(1, 2), 2, m)
    assert bounds.lower == bounds.upper == 2 ** (m + 1)


def test_localized_window_clips_to_unit_interval(classical):
    window = localized_window(classical, 1, 1, 2)
    assert (window.x_lo, window.x_hi) == (Fraction(1, 2), 1)
    assert (window.y_lo, window.y_hi) == (Fraction(-1, 2), Fraction(1, 2))


@pytest.mark.parametrize("x0", [Fraction(1, 3), Fraction(1, 5), Fraction(3, 2), Fraction(-1, 4)])
def test_localized_window_rejects_bad_centers(classical, x0):
    with pytest.raises(InvalidInputError):
        localized_window(classical, x0, 1, 2)


def test_misaligned_window(classical):
    window = CountWindow(x_lo=Fraction(1, 3), x_hi=Fraction(1, 2), y_lo=0, y_hi=1)
    with pytest.raises(InvalidInputError):
        strip_mesh_count(make_strip(classical, 3), 3, window)


def test_localized_count_at_fine_center(classical):
    x0 = Fraction(1, 1024)
    window = localized_window(classical, x0, 2, 2)
    assert (window.x_lo, window.x_hi) == (0, Fraction(257, 1024))
    assert window.y_lo == Fraction(10, 1024) - Fraction(1, 4)

    bounds = localized_count(classical, x0, 2, 2)
    assert bounds.lower <= bounds.upper <= theorem_bound(Fraction(1), 2, 2) == 192

    # Partial columns sit between the aligned windows just inside and just outside
    strip = make_strip(classical, 4)
    inner = window.model_copy(update={"x_hi": Fraction(1, 4)})
    outer = window.model_copy(update={"x_hi": Fraction(5, 16)})
    assert strip_mesh_count(strip, 4, inner) <= bounds.upper <= strip_mesh_count(strip, 4, outer)


@pytest.mark.parametrize("seq", small_sequences())
def test_merged_fine_columns_match_coarse_columns(seq):
    # Extents taken at a finer level and merged back give the same count
    strip = make_strip(seq, 3)
    window = CountWindow(x_lo=Fraction(1, seq.base), x_hi=1, y_lo=Fraction(-1, 3), y_hi=Fraction(2, 3))
    coarse = _window_strip_count(strip_extents(strip, 3), window, 3)
    assert _window_strip_count(strip_extents(strip, 5), window, 3) == coarse
    assert _window_strip_count(strip_extents(strip, 5), None, 5) == strip_mesh_count(strip, 5)


def test_empty_window_x_range(classical):
    window = CountWindow(x_lo=Fraction(1, 4), x_hi=Fraction(1, 4), y_lo=0, y_hi=1)
    with pytest.raises(InvalidInputError):
        strip_mesh_count(make_strip(classical, 3), 3, window)


def test_window_counter_matches_functions(signal):
    counter = WindowCounter(signal, 4, refinement=1)
    window = CountWindow(x_lo=Fraction(1, 4), x_hi=Fraction(3, 4), y_lo=Fraction(-1, 4), y_hi=Fraction(1, 2))
    assert counter.strip_count(window) == strip_mesh_count(make_strip(signal, 4), 4, window)
    assert counter.lower_count(window) == connected_lower_count(signal, 4, window, refinement=1)
    assert GraphSamples(signal, 4, 1).point_count(window) <= counter.lower_count(window)


@pytest.mark.parametrize("seq", [
    signed_power("alternating", 2),
    signed_power("seeded:3", 2),
    explicit(("1", "1/2", "-1/4"), 0, 2),
])
def test_theorem_scan(seq):
    rows = theorem_scan(seq, 2, 3)
    assert len(rows) == 5
    assert all(row.ok and row.bounds.lower <= row.bounds.upper for row in rows)
    assert rows[0].theorem_bound == theorem_bound(eta(seq).value, 3, 2)


def test_theorem_scan_without_finite_eta(steep):
    rows = theorem_scan(steep, 1, 2)
    assert all(row.theorem_bound is None and row.ok for row in rows)


def test_tables(classical):
    lemma = lemma_table(verify_lemma_exhaustive(classical, 1, 1))
    assert list(lemma.columns) == ["n", "m", "i", "y", "count", "bound", "ok"]
    assert set(lemma["ok"]) == {"true"}

    scan = scan_table(theorem_scan(classical, 1, 1))
    assert list(scan.columns) == ["x0", "n", "m", "lower", "upper", "theorem_bound"]
    assert scan["x0"].tolist() == ["0", "1/2", "1"]


@pytest.mark.slow
@pytest.mark.parametrize("seq", [
    signed_power("alternating", 2),
    signed_power("seeded:0", 2),
])
def test_lemma_holds_exhaustively(seq):
    rows = verify_lemma_exhaustive(seq, 8, 6, workers=2)
    assert all(row.ok for row in rows)


@pytest.mark.slow
def test_lemma_holds_for_classical_curve(classical):
    rows = verify_lemma_exhaustive(classical, 8, 6, workers=2)
    assert all(row.ok for row in rows)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
def test_lemma_holds_for_random_signs(seed):
    rows = verify_lemma_exhaustive(signed_power(f"seeded:{seed}", 2), 8, 6)
    assert all(row.ok for row in rows)


@pytest.mark.slow
@pytest.mark.parametrize("seq", [
    signed_power("alternating", 2),
    signed_power("seeded:0", 2),
    signed_power("seeded:1", 2),
])
def test_theorem_bound_holds_for_every_dyadic_center(seq):
    for n in range(9):
        for m in range(1, 7):
            rows = theorem_scan(seq, n, m)
            assert all(row.ok and row.bounds.lower <= row.bounds.upper for row in rows), (n, m)


@pytest.mark.slow
def test_theorem_bound_holds_for_classical_curve(classical):
    for n in range(9):
        for m in range(1, 7):
            assert all(row.ok for row in theorem_scan(classical, n, m)), (n, m)
