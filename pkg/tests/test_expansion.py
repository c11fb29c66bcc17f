"""Tests for expansion.py: greedy rational expansions and their replay."""
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core import DepthOverflow, DimensionMismatch, GeometricWeights, PrefixWeights, PreconditionError, ZetaWeights
from expansion import (InfeasibleExpansion, _nearest_to_midpoint, combination_pushforward,
                       complement_identity_check, lambda_expand, replay, simplest_rational)

FAMILIES = [
    GeometricWeights(ratio=0.5),
    GeometricWeights(ratio=2.0 / 3.0),
    PrefixWeights(prefix=(0.4, 0.3), tail_ratio=0.5),
    ZetaWeights(exponent=2.0),
]


class TestSimplestRational:

    def test_integer_inside(self):
        assert simplest_rational(2.5, 3.5) == 3
        assert simplest_rational(0, Fraction(1, 3)) == 0

    def test_third(self):
        assert simplest_rational(Fraction(3, 10), Fraction(2, 5)) == Fraction(1, 3)

    def test_prefers_smaller_denominator(self):
        assert simplest_rational(Fraction(1, 3), Fraction(1, 2)) == Fraction(1, 2)
        assert simplest_rational(Fraction(3, 5), Fraction(2, 3)) == Fraction(2, 3)

    def test_degenerate_interval(self):
        assert simplest_rational(Fraction(5, 7), Fraction(5, 7)) == Fraction(5, 7)

    def test_empty_interval(self):
        with pytest.raises(PreconditionError):
            simplest_rational(1, 0)

    def test_midpoint_tie_takes_smaller_numerator(self):
        assert _nearest_to_midpoint(Fraction(0), Fraction(1), 1) == 0
        assert _nearest_to_midpoint(Fraction(0), Fraction(1), 2) == Fraction(1, 2)


class TestLambdaExpand:

    def test_zero(self, half):
        E = lambda_expand(half, 0.0, 10)
        assert all(q == 0 for q in E.digits)
        assert all(r == 0.0 for r in E.remainders)

    def test_one(self, half):
        E = lambda_expand(half, 1.0, 10)
        assert all(q == 1 for q in E.digits)
        assert E.remainders[-1] == pytest.approx(2.0 ** -10)

    @pytest.mark.parametrize('W', [
        GeometricWeights(ratio=0.6),
        GeometricWeights(ratio=0.75),
        GeometricWeights(ratio=0.5025428844591452),
        ZetaWeights(exponent=2.0),
    ], ids=['geometric-0.6', 'geometric-0.75', 'geometric-near-half', 'zeta-2'])
    def test_one_stays_feasible_at_depth(self, W):
        E = lambda_expand(W, 1.0, 40, denominator_bound=4096)
        assert len(E.digits) == 40
        assert all(q == 1 for q in E.digits)
        assert E.remainders[-1] == pytest.approx(W.tail_mass(41), abs=1e-12)

    def test_third(self, half):
        E = lambda_expand(half, 1.0 / 3.0, 20, denominator_bound=1024)
        assert len(E.digits) == 20
        assert all(q.denominator <= 1024 for q in E.digits)
        assert abs(1.0 / 3.0 - E.reconstruction(half)) <= half.tail_mass(21) + 1e-15

    def test_digits_lie_in_windows(self, two_thirds):
        E = lambda_expand(two_thirds, 0.41, 30)
        for q, (lo, hi) in zip(E.digits, E.windows):
            assert lo - 1e-12 <= float(q) <= hi + 1e-12
            assert 0 <= q <= 1

    def test_remainders_stay_within_tail(self, two_thirds):
        E = lambda_expand(two_thirds, 0.77, 30)
        for n, r in enumerate(E.remainders[1:], 1):
            assert -1e-12 <= r <= two_thirds.tail_mass(n + 1) + 1e-12

    @pytest.mark.parametrize('W', FAMILIES, ids=lambda W: f"{W.kind}")
    @pytest.mark.parametrize('t', [0.3, 1.0 / 3.0, 0.7, 0.999])
    def test_families_converge(self, W, t):
        E = lambda_expand(W, t, 40, denominator_bound=4096)
        assert abs(t - E.reconstruction(W)) <= W.tail_mass(41) + 1e-12

    def test_fractional_digit_needs_denominator(self):
        W = PrefixWeights(prefix=(0.5, 0.45), tail_ratio=0.5)
        E = lambda_expand(W, 0.635, 5, denominator_bound=4)
        assert E.digits[0] == 1
        assert E.digits[1] == Fraction(1, 4)

    def test_infeasible_under_small_denominator_bound(self):
        W = PrefixWeights(prefix=(0.5, 0.45), tail_ratio=0.5)
        with pytest.raises(InfeasibleExpansion) as exc:
            lambda_expand(W, 0.635, 5, denominator_bound=2)
        assert exc.value.step == 2
        lo, hi = exc.value.window
        assert 0.18 < lo < hi < 0.31

    def test_t_out_of_range(self, half):
        with pytest.raises(PreconditionError, match="t outside"):
            lambda_expand(half, 1.5, 10)
        with pytest.raises(PreconditionError):
            lambda_expand(half, -0.1, 10)

    def test_bad_arguments(self, half):
        with pytest.raises(PreconditionError):
            lambda_expand(half, 0.5, 10, denominator_bound=1)
        with pytest.raises(PreconditionError):
            lambda_expand(half, 0.5, 0)

    def test_depth_overflow(self):
        with pytest.raises(DepthOverflow):
            lambda_expand(GeometricWeights(ratio=0.5, max_depth=5), 0.5, 10)

    def test_to_json_digits_are_fractions(self, half):
        data = lambda_expand(half, 1.0 / 3.0, 4).to_json()
        assert data['digits'] == ['0/1', '1/1', '0/1', '1/1']
        assert data['depth'] == 4
        assert len(data['remainders']) == 5


class TestReplay:

    @pytest.mark.parametrize('W', FAMILIES, ids=lambda W: f"{W.kind}")
    def test_replay_matches(self, W):
        E = lambda_expand(W, 0.6180339887, 40, denominator_bound=4096)
        replayed = replay(E, W)
        assert len(replayed) == 41
        assert np.max(np.abs(np.array(replayed) - np.array(E.remainders))) <= 1e-14

    @pytest.mark.parametrize('W', FAMILIES, ids=lambda W: f"{W.kind}")
    def test_complement_identity(self, W):
        E = lambda_expand(W, 0.25, 40, denominator_bound=4096)
        assert complement_identity_check(E, W)


class TestPushforward:

    def test_recovers_convex_combination(self, two_thirds):
        t, N = 0.37, 40
        E = lambda_expand(two_thirds, t, N)
        x, y = np.array([2.0, 0.0]), np.array([0.0, 1.0])
        Z = combination_pushforward(E, x, y)
        assert Z.dimension == 2
        total = Z.exact_weighted_sum(two_thirds)
        expected = t * x + (1 - t) * y
        assert np.linalg.norm(total - expected) <= two_thirds.tail_mass(N + 1) * np.linalg.norm(x - y) + 1e-12

    def test_t_one_gives_x_on_the_support(self, half):
        E = lambda_expand(half, 1.0, 8)
        Z = combination_pushforward(E, [3.0], [-1.0])
        assert np.all(Z.points(8) == 3.0)
        assert Z.point(9).tolist() == [-1.0]

    def test_bound_is_max_norm(self, half):
        Z = combination_pushforward(lambda_expand(half, 0.5, 4), [3.0, 4.0], [1.0, 0.0])
        assert Z.bound == 5.0

    def test_dimension_mismatch(self, half):
        with pytest.raises(DimensionMismatch):
            combination_pushforward(lambda_expand(half, 0.5, 4), [1.0], [1.0, 2.0])


class TestWindowProperties:

    @settings(max_examples=60, deadline=None)
    @given(t=st.floats(min_value=0.0, max_value=1.0), r=st.floats(min_value=0.2, max_value=0.8))
    def test_digits_in_unit_interval_and_remainders_in_tail(self, t, r):
        W = GeometricWeights(ratio=r)
        E = lambda_expand(W, t, 25, denominator_bound=4096)
        assert all(0 <= q <= 1 for q in E.digits)
        for n, rem in enumerate(E.remainders[1:], 1):
            assert -1e-12 <= rem <= W.tail_mass(n + 1) + 1e-12
