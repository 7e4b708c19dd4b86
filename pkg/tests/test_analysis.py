import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from circlesemi import zoo
from circlesemi.analysis import (AnalysisConfig, VariationCapExceeded, _count_components, analyze,
                                 box_counts, box_dimension_graph, entropy_from_variation, entropy_lower_bound,
                                 fiber_components, fiber_survey, lift_nondecreasing, profile_exponent,
                                 variation_of_iterate, variation_profile_alpha, variation_sequence)
from circlesemi.circle import standard_map
from circlesemi.semiconj import make_evaluator
from circlesemi.structure import find_fold

FOLDED = zoo.folded()
E_FOLDED = make_evaluator(FOLDED)
W_FOLDED = find_fold(E_FOLDED)


# ---------------------------------------------------------------------------
# exact variation of iterates of the folded map by composing linear pieces


def _lift_knots(lo, hi):
    """Breakpoints ``k + x_i`` of the folded lift strictly inside (lo, hi), with their images."""
    out = []
    for k in range(math.floor(min(lo, hi)) - 1, math.ceil(max(lo, hi)) + 1):
        for x, y in zoo.FOLDED_LIFT[:-1]:
            t = k + x
            if min(lo, hi) < t < max(lo, hi):
                out.append(t)
    return sorted(out, reverse=hi < lo)


def _exact_lift(x):
    k = math.floor(x)
    u = x - k
    pts = zoo.FOLDED_LIFT
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if x0 <= u <= x1:
            return 2 * k + y0 + (y1 - y0) * (u - x0) / (x1 - x0)


def exact_iterate_graph(n):
    """Breakpoints of ``g^n`` on [0, 1] as exact (x, y) pairs."""
    graph = [(F(0), F(0)), (F(1), F(1))]
    for _ in range(n):
        new = [graph[0]]
        for (x0, y0), (x1, y1) in zip(graph, graph[1:]):
            for t in _lift_knots(y0, y1):
                new.append((x0 + (x1 - x0) * (t - y0) / (y1 - y0), t))
            new.append((x1, y1))
        graph = [(x, _exact_lift(y)) for x, y in new]
    return graph


def exact_variation(n):
    g = exact_iterate_graph(n)
    return sum(abs(b[1] - a[1]) for a, b in zip(g, g[1:]))


def test_exact_oracle_first_step():
    assert exact_variation(1) == F(9, 8) + F(14, 8) + F(21, 8)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_variation_folded_exact(n):
    # a one-ulp error in a piece endpoint is stretched by at most Lip^n
    tol = 1e-15 * FOLDED.lipschitz**n
    assert variation_of_iterate(FOLDED, n) == pytest.approx(float(exact_variation(n)), rel=tol)


def test_variation_sequence_folded_known_values():
    assert variation_sequence(FOLDED, 4) == pytest.approx([5.5, 31.5, 179.5, 1023.5], rel=1e-13)


@pytest.mark.parametrize("D", [2, 3, 5])
def test_variation_of_pure_expansion(D):
    m = standard_map(0.0, 0.3, degree=D)
    assert variation_sequence(m, 8) == pytest.approx([float(D) ** n for n in range(1, 9)], rel=1e-12)


def test_variation_standard_against_grid():
    m = standard_map(0.5, 0.0)
    x = np.linspace(0, 1, 10**7 + 1)
    grid = float(np.sum(np.abs(np.diff(m(x)))))
    assert variation_of_iterate(m, 1) == pytest.approx(grid, abs=1e-4)
    x = np.linspace(0, 1, 2 * 10**6 + 1)
    y = m(m(x))
    assert variation_of_iterate(m, 2) == pytest.approx(float(np.sum(np.abs(np.diff(y)))), rel=1e-5)


@pytest.mark.parametrize("m", [FOLDED, standard_map(0.5, 0.0), zoo.three_piece(), zoo.plateau()])
def test_variation_nondecreasing(m):
    v = variation_sequence(m, 9)
    assert np.all(np.diff(v) >= -1e-9)
    assert v[0] >= 1.0


def test_variation_zero_iterate():
    assert variation_of_iterate(FOLDED, 0) == 1.0
    with pytest.raises(ValueError):
        variation_of_iterate(FOLDED, -1)


def test_variation_cap_reports_progress():
    with pytest.raises(VariationCapExceeded) as info:
        variation_sequence(FOLDED, 12, cap=5_000)
    exc = info.value
    assert exc.cap == 5_000 and exc.pieces > 5_000
    assert len(exc.values) == exc.n_achieved
    assert list(exc.values) == pytest.approx(variation_sequence(FOLDED, exc.n_achieved))


# ---------------------------------------------------------------------------
# entropy


@pytest.mark.parametrize("m, want", [
    (zoo.doubling(), math.log(2)),
    (standard_map(0.0, 0.37), math.log(2)),
    (zoo.cubic_monotone(), math.log(3)),
    (zoo.plateau(), math.log(2)),
])
def test_entropy_of_monotone_maps(m, want):
    est = entropy_from_variation(m)
    assert est.variation_rate == pytest.approx(want, abs=1e-6)
    assert est.horseshoe_lb is None


def test_entropy_folded():
    est = entropy_from_variation(FOLDED, witness=W_FOLDED)
    assert est.horseshoe_lb == math.log(4)
    assert est.variation_rate >= est.horseshoe_lb - 0.02
    # slope of the exact sequence stays below the Lipschitz bound
    assert est.variation_rate <= math.log(FOLDED.lipschitz)


def test_entropy_window_slides_on_cap():
    est = entropy_from_variation(FOLDED, 6, 14, cap=200_000)
    lo, hi = est.n_range
    assert hi - lo == 4 and hi < 14
    assert len(est.values) == hi


def test_entropy_cap_too_early_raises():
    with pytest.raises(VariationCapExceeded):
        entropy_from_variation(FOLDED, 6, 14, cap=100)


def test_entropy_validates_window():
    with pytest.raises(ValueError):
        entropy_from_variation(FOLDED, 6, 8)


@pytest.mark.parametrize("N", [1, 2, 3, 5])
def test_entropy_lower_bound_formula(N):
    w = find_fold(E_FOLDED)
    w = type(w)(**{**w.__dict__, "N": N})
    assert entropy_lower_bound(w) == math.log(2**N + 2) / N


# ---------------------------------------------------------------------------
# variation profile of alpha


@pytest.mark.parametrize("omega", [0.0, 0.25, 0.6])
def test_profile_flat_for_rotations(omega):
    prof = variation_profile_alpha(make_evaluator(standard_map(0.0, omega)), 6)
    assert np.allclose(prof.values, 1.0, atol=1e-9)


def test_profile_flat_for_increasing_lift():
    prof = variation_profile_alpha(make_evaluator(standard_map(0.12, 0.3)), 5)
    assert np.allclose(prof.values, 1.0, atol=1e-9)


def test_profile_folded_grows():
    prof = variation_profile_alpha(E_FOLDED, 7, W_FOLDED)
    assert prof.M == profile_exponent(FOLDED, 1) == 3
    assert all(prof.bound_check)
    assert np.all(prof.ratios >= (4 / 2) * 0.95)


def test_profile_drops_depths_above_cap():
    prof = variation_profile_alpha(E_FOLDED, 10, max_points=2**12)
    assert prof.depths == (1, 2, 3, 4)
    with pytest.raises(ValueError):
        variation_profile_alpha(E_FOLDED, 2, M=30)


def test_profile_exponent():
    assert profile_exponent(zoo.doubling()) == 1
    assert profile_exponent(FOLDED, 2) == 6


# ---------------------------------------------------------------------------
# fibers


def test_count_components_synthetic():
    # one crossing inside a cell, one touch at a grid point, nothing across the seam
    A = np.array([0.1, 0.3, 0.6, 0.8, 0.5, 0.8, 1.1])
    assert _count_components(A, 0.5, 1e-9) == 2
    # the closing point repeats the first one, so a touch there is counted once
    assert _count_components(np.array([0.5, 0.7, 0.9, 1.2, 1.5]), 0.5, 1e-9) == 1
    assert _count_components(np.array([0.5, 0.7, 1.6, 1.5]), 0.5, 1e-9) == 2
    # a single cell that crosses two levels holds two points
    assert _count_components(np.array([0.0, 2.2, 1.0]), 0.3, 1e-9) == 3


@given(st.integers(2, 40), st.floats(0.01, 0.99))
def test_count_components_monotone_lift(R, theta):
    A = (np.arange(R + 1) + 0.5) / R
    assert _count_components(A, theta, 1e-12) == 1


@pytest.mark.parametrize("m", [zoo.doubling(), standard_map(0.0, 0.2), standard_map(0.15, 0.1), zoo.cubic_monotone()])
def test_fibers_single_for_monotone(m):
    e = make_evaluator(m)
    reps = fiber_survey(e, np.random.default_rng(1).uniform(0, 1, 20), [2**12, 2**15])
    assert all(c == 1 for r in reps for c in r.component_counts)


def test_fibers_phase_shift_on_simple_fibers():
    e = make_evaluator(standard_map(0.15, 0.1))
    for th in np.random.default_rng(4).uniform(0, 1, 10):
        a = fiber_components(e, th, [2**12]).component_counts[0]
        b = fiber_components(e, th, [2**12], phase=0.5).component_counts[0]
        assert abs(a - b) <= 1


def test_fibers_folded_grow_with_resolution():
    reps = fiber_survey(E_FOLDED, np.random.default_rng(0).uniform(0, 1, 20), [2**12, 2**15, 2**18])
    med = np.median([r.component_counts for r in reps], axis=0)
    assert med[0] < med[1] < med[2]


def test_fibers_validate():
    with pytest.raises(ValueError):
        fiber_components(E_FOLDED, 0.3, [2**15, 2**12])
    with pytest.raises(ValueError):
        fiber_components(E_FOLDED, 0.3, [2**12], phase=1.0)


# ---------------------------------------------------------------------------
# box dimension


@pytest.mark.parametrize("m", [zoo.doubling(), standard_map(0.0, 0.4), standard_map(0.1, 0.2)])
def test_dimension_of_lines(m):
    est = box_dimension_graph(make_evaluator(m))
    assert est.dimension == pytest.approx(1.0, abs=0.05)


def test_dimension_identity_counts_exact():
    # alpha(x) = x meets exactly one box per column at every depth
    assert box_counts(make_evaluator(zoo.doubling()), [3, 5, 8]) == [8, 32, 256]


def test_dimension_folded_fractal():
    est = box_dimension_graph(E_FOLDED)
    assert 1.2 < est.dimension < 2.0
    assert np.all(np.diff(est.counts) > 0)


def test_dimension_validates():
    with pytest.raises(ValueError):
        box_dimension_graph(E_FOLDED, [4, 5])


# ---------------------------------------------------------------------------
# full report


def test_lift_nondecreasing_threshold():
    assert lift_nondecreasing(standard_map(0.3, 0.0))
    assert not lift_nondecreasing(standard_map(0.33, 0.0))
    assert not lift_nondecreasing(FOLDED)


SMALL = AnalysisConfig(n_min=4, n_max=8, fold_n_max=4, profile_j_max=4, fiber_thetas=5,
                       fiber_resolutions=(2**10, 2**12), box_depths=(4, 5, 6, 7))


def test_analyze_folded():
    rep = analyze(FOLDED, SMALL)
    assert rep.fold["N"] == 1 and not rep.lift_monotone
    assert all(rep.checks.values())
    d = rep.to_dict()
    assert d["config"]["fiber_resolutions"] == [1024, 4096]
    assert len(d["fibers"]["counts"]) == 5


def test_analyze_rotation():
    rep = analyze(standard_map(0.0, 0.3), SMALL)
    assert rep.fold is None and rep.lift_monotone
    assert rep.entropy["variation_rate"] == pytest.approx(math.log(2), abs=1e-9)
    assert rep.fibers["median"] == [1.0, 1.0]
    assert all(rep.checks.values())


def test_analyze_seed_determines_thetas():
    a = analyze(zoo.doubling(), SMALL).fibers["thetas"]
    b = analyze(zoo.doubling(), AnalysisConfig(**{**SMALL.__dict__, "seed": 1})).fibers["thetas"]
    assert a != b
    assert a == analyze(zoo.doubling(), SMALL).fibers["thetas"]
