"""Tests for series.py: truncated sums with certified tails."""
import math
from unittest.mock import patch

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core import (ConstantSequence, DepthOverflow, FiniteSupportSequence, GeometricWeights, Interval,
                  PeriodicSequence, SampledSequence, ZetaWeights)
from funcparse import builtin, parse_function
from series import (CONVERGENT, DIVERGES, UNBOUNDED_ERROR, SeriesEstimate, default_depth, point_series_enclosure,
                    segment_upper_bound, weighted_function_series, weighted_point_series)

REMARK_RHS = 1.0 + (math.e - 1.0) / 3.0


class TestPointSeries:

    def test_constant_sequence(self, half):
        point, radius = weighted_point_series(half, ConstantSequence([2.0]), 10)
        assert point[0] == pytest.approx(2.0 * (1 - 2.0 ** -10))
        assert radius == pytest.approx(2.0 * 2.0 ** -10)

    def test_single_nonzero_term(self, half, remark_sequence):
        point, radius = weighted_point_series(half, remark_sequence, 1)
        assert point.tolist() == [0.5]
        assert radius == 0.5

    def test_periodic_sequence(self, half):
        point, radius = weighted_point_series(half, PeriodicSequence([[0.0], [1.0]]), 20)
        brute = math.fsum(2.0 ** -i for i in range(2, 61, 2))
        assert abs(point[0] - brute) <= radius
        assert radius == pytest.approx(2.0 ** -20)

    def test_enclosure_is_exact_for_structured_sequences(self, half):
        center, radius = point_series_enclosure(half, PeriodicSequence([[0.0], [1.0]]), 5)
        assert center[0] == pytest.approx(1.0 / 3.0)
        assert radius == 0.0

    def test_enclosure_falls_back_for_sampled(self, half, unit_interval):
        X = SampledSequence(unit_interval, seed=1)
        center, radius = point_series_enclosure(half, X, 30)
        assert radius == pytest.approx(X.bound * 2.0 ** -30)

    def test_depth_overflow(self):
        W = GeometricWeights(ratio=0.5, max_depth=10)
        with pytest.raises(DepthOverflow):
            weighted_point_series(W, ConstantSequence([1.0]), 50)

    @settings(max_examples=100, deadline=None)
    @given(r=st.floats(min_value=0.1, max_value=0.9), a=st.floats(min_value=-3, max_value=3),
           b=st.floats(min_value=-3, max_value=3), N=st.integers(min_value=1, max_value=40))
    def test_truncation_soundness_periodic(self, r, a, b, N):
        W = GeometricWeights(ratio=r)
        X = PeriodicSequence([[a], [b]])
        exact = (a + r * b) / (1.0 + r)   # closed form for the two-cycle
        point, radius = weighted_point_series(W, X, N)
        assert abs(point[0] - exact) <= radius + 1e-12


class TestFunctionSeries:

    def test_remark_right_hand_side(self, two_thirds, remark_sequence):
        est = weighted_function_series(two_thirds, builtin('exp'), remark_sequence, 60)
        assert est.classification == CONVERGENT
        assert est.value == pytest.approx(REMARK_RHS, abs=1e-12)
        assert est.value == pytest.approx(1.5727606, abs=1e-7)

    def test_zero_function(self, half):
        est = weighted_function_series(half, builtin('linear(0,0)'), PeriodicSequence([[1.0], [-2.0]]), 7)
        assert est.partial_sum == 0.0
        assert est.tail_bound == 0.0

    def test_constant_square(self, half):
        est = weighted_function_series(half, builtin('square'), ConstantSequence([3.0]), 10)
        assert est.partial_sum == pytest.approx(9.0 * (1 - 2.0 ** -10))
        assert est.tail_center == pytest.approx(9.0 * 2.0 ** -10)
        assert est.tail_bound <= 1e-12
        assert est.value == pytest.approx(9.0)

    def test_finite_support_shorter_than_depth(self, half):
        X = FiniteSupportSequence([[1.0], [2.0], [3.0]], [0.0])
        est = weighted_function_series(half, builtin('square'), X, 2)
        assert est.partial_sum == pytest.approx(0.5 + 0.25 * 4)
        assert est.tail_center == pytest.approx(0.125 * 9)

    def test_periodic_exact_tail(self, half):
        est = weighted_function_series(half, builtin('exp'), PeriodicSequence([[0.0], [1.0]]), 9)
        assert est.value == pytest.approx(2.0 / 3.0 + math.e / 3.0, abs=1e-12)

    def test_zeta_weights_periodic(self):
        W = ZetaWeights(exponent=2.0)
        est = weighted_function_series(W, builtin('square'), PeriodicSequence([[0.0], [1.0]]), 50)
        assert est.value == pytest.approx(0.25, abs=1e-12)   # even indices carry 1/4 of the mass

    def test_sampled_with_interval_bound(self, half, unit_interval):
        X = SampledSequence(unit_interval, seed=3)
        est = weighted_function_series(half, builtin('exp'), X, 40)
        assert est.classification == CONVERGENT
        assert est.tail_bound == pytest.approx(math.e * 2.0 ** -40, rel=1e-6)
        brute = math.fsum(half.weight_at(i) * math.exp(X.point(i)[0]) for i in range(1, 120))
        assert est.lower <= brute <= est.upper

    def test_unbounded_error_without_bounds(self, half):
        f = parse_function("log(x)", 1)
        X = SampledSequence(Interval(0.0, 1.0), seed=0)
        est = weighted_function_series(half, f, X, 20)
        assert est.classification == UNBOUNDED_ERROR
        assert est.upper == math.inf

    def test_divergence_threshold(self, half):
        f = parse_function("1 / x", 1, lower_bound=0.0)
        X = SampledSequence(Interval(0.0, 1e-14), seed=0)
        est = weighted_function_series(half, f, X, 20)
        assert est.classification == DIVERGES
        assert est.value == math.inf

    def test_dimension_mismatch(self, half):
        from core import DimensionMismatch
        with pytest.raises(DimensionMismatch):
            weighted_function_series(half, builtin('exp', 2), ConstantSequence([1.0]), 5)

    def test_evaluation_error_propagates(self, half):
        from core import EvaluationError
        with pytest.raises(EvaluationError):
            weighted_function_series(half, parse_function("log(x)", 1), ConstantSequence([0.0]), 5)

    def test_tail_bound_nonincreasing(self, half, unit_interval):
        X = SampledSequence(unit_interval, seed=5)
        bounds = [weighted_function_series(half, builtin('square'), X, N).tail_bound for N in (5, 10, 20, 30)]
        assert bounds == sorted(bounds, reverse=True)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=1000), N=st.integers(min_value=1, max_value=30))
    def test_partial_sums_monotone_for_nonnegative_f(self, seed, N):
        W = GeometricWeights(ratio=0.7)
        X = SampledSequence(Interval(-2.0, 2.0), seed=seed)
        f = builtin('square')
        a = weighted_function_series(W, f, X, N).partial_sum
        b = weighted_function_series(W, f, X, N + 1).partial_sum
        assert b >= a

    def test_to_dict(self, half):
        est = SeriesEstimate(1.0, 3, 0.5, CONVERGENT)
        d = est.to_dict()
        assert d['partial_sum'] == 1.0
        assert d['terms_used'] == 3
        assert d['classification'] == CONVERGENT


class TestSegmentBound:

    def test_exp(self):
        assert segment_upper_bound(builtin('exp'), [0.0], [1.0]) == pytest.approx(1.0 + math.e)

    def test_negative_values(self):
        assert segment_upper_bound(builtin('neg-square'), [-2.0], [2.0]) == 0.0

    def test_square_at_origin(self):
        assert segment_upper_bound(builtin('square'), [0.0], [0.0]) == 0.0

    def test_bounds_convex_function_on_segment(self):
        f = builtin('exp')
        rng = np.random.default_rng(0)
        for _ in range(20):
            x, y = rng.uniform(-3, 3, size=2)
            bound = segment_upper_bound(f, [x], [y])
            for t in np.linspace(0.0, 1.0, 100):
                assert f([t * x + (1 - t) * y]) <= bound + 1e-12


class TestDefaultDepth:

    def test_scaled_by_bound(self, half):
        X = ConstantSequence([4.0])
        N = default_depth(half, X, 1e-10)
        assert X.bound * half.tail_mass(N + 1) <= 1e-10


class TestDivergenceThreshold:

    def test_threshold_is_read_at_call_time(self, half):
        f = parse_function("1 / x", 1, lower_bound=0.0)
        X = SampledSequence(Interval(0.0, 1.0), seed=0)
        with patch('series.DIVERGENCE_THRESHOLD', 1e300):
            assert weighted_function_series(half, f, X, 20).classification == UNBOUNDED_ERROR
        with patch('series.DIVERGENCE_THRESHOLD', 0.0):
            assert weighted_function_series(half, f, X, 20).classification == DIVERGES
