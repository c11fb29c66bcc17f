"""Certified evaluation of the weighted series sum lambda_i x_i and sum mu_i f(x_i)."""
import logging
import math
import os
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from core import (TAIL_TARGET, BoundedSequence, ConstantSequence, DimensionMismatch,
                  FiniteSupportSequence, PeriodicSequence, PreconditionError, SampledSequence,
                  WeightSequence, as_point, positive_part)
from funcparse import ScalarFunction

logger = logging.getLogger(__name__)

DIVERGENCE_THRESHOLD = float(os.getenv('CONVEXITY_DIVERGENCE_THRESHOLD', '1e12'))

CONVERGENT = 'convergent-with-bound'
DIVERGES = 'diverges-to-plus-infinity'
UNBOUNDED_ERROR = 'unbounded-error'

_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class SeriesEstimate:
    """Partial sum of N terms plus a bracket for the remaining tail.

    When convergent, the true sum lies in [lower, upper] where the tail is
    tail_center +/- tail_bound. tail_center is nonzero only when the tail
    is known exactly (structured sequences).
    """
    partial_sum: float
    terms_used: int
    tail_bound: float
    classification: str
    tail_center: float = 0.0

    @property
    def value(self) -> float:
        if self.classification == DIVERGES:
            return math.inf
        return self.partial_sum + self.tail_center

    @property
    def lower(self) -> float:
        if self.classification == UNBOUNDED_ERROR:
            return -math.inf
        if self.classification == DIVERGES:
            return self.partial_sum
        return self.value - self.tail_bound

    @property
    def upper(self) -> float:
        if self.classification != CONVERGENT:
            return math.inf
        return self.value + self.tail_bound

    @property
    def is_convergent(self) -> bool:
        return self.classification == CONVERGENT

    def to_dict(self) -> dict:
        return {
            'partial_sum': self.partial_sum,
            'terms_used': self.terms_used,
            'tail_center': self.tail_center,
            'tail_bound': self.tail_bound,
            'classification': self.classification,
            'value': self.value,
        }


def _check_depth(W: WeightSequence, N: int):
    if N < 1:
        raise PreconditionError(f"series depth must be positive, got {N}")
    W._check_index(N + 1)


def weighted_point_series(W: WeightSequence, X: BoundedSequence, N: int) -> Tuple[np.ndarray, float]:
    """Return (sum_{i<=N} lambda_i x_i, K * tail_mass(N+1))."""
    _check_depth(W, N)
    point = W.weights(N) @ X.points(N)
    radius = X.bound * W.tail_mass(N + 1)
    return point, radius


def point_series_enclosure(W: WeightSequence, X: BoundedSequence, N: int) -> Tuple[np.ndarray, float]:
    """Centre and radius of a ball containing sum_i lambda_i x_i.

    Structured sequences (finite support, periodic, constant) give the exact
    sum with radius zero; other sequences fall back to the truncated sum.
    """
    _check_depth(W, N)
    exact = X.exact_weighted_sum(W)
    if exact is not None:
        return exact, 0.0
    return weighted_point_series(W, X, N)


def _first_at_or_after(j: int, m: int, n: int) -> int:
    """Smallest index >= n congruent to j modulo m (1-based cycle position j)."""
    if j >= n:
        return j
    return j + m * math.ceil((n - j) / m)


def _structured_tail(W: WeightSequence, X: BoundedSequence, values: List[float], N: int) -> float:
    if isinstance(X, ConstantSequence):
        return values[0] * W.tail_mass(N + 1)
    if isinstance(X, FiniteSupportSequence):
        k = len(X.support)
        fill_value = values[-1]
        if N >= k:
            return fill_value * W.tail_mass(N + 1)
        head = math.fsum(W.weight_at(i) * values[i - 1] for i in range(N + 1, k + 1))
        return head + fill_value * W.tail_mass(k + 1)
    m = len(values)
    return math.fsum(values[j - 1] * W.residue_tail_mass(_first_at_or_after(j, m, N + 1), m)
                     for j in range(1, m + 1))


def _value_vector(X: BoundedSequence, values: List[float], N: int) -> np.ndarray:
    if isinstance(X, ConstantSequence):
        return np.full(N, values[0])
    if isinstance(X, FiniteSupportSequence):
        out = np.full(N, values[-1])
        k = min(N, len(X.support))
        out[:k] = values[:k]
        return out
    return np.resize(np.asarray(values, dtype=float), N)


def _range_box(X: BoundedSequence) -> Tuple[np.ndarray, np.ndarray]:
    """A box containing every point of X."""
    if isinstance(X, SampledSequence):
        return X.domain.bounding_box()
    k = X.bound
    return np.full(X.dimension, -k), np.full(X.dimension, k)


def weighted_function_series(W: WeightSequence, f: ScalarFunction, X: BoundedSequence, N: int) -> SeriesEstimate:
    """sum_i mu_i f(x_i) truncated at N terms, with a tail policy per sequence type.

    Raises EvaluationError if f cannot be evaluated at one of the points.
    """
    _check_depth(W, N)
    if f.arity != X.dimension:
        raise DimensionMismatch(f"f takes R^{f.arity} but the sequence lives in R^{X.dimension}")
    mu = W.weights(N)

    if isinstance(X, (ConstantSequence, FiniteSupportSequence, PeriodicSequence)):
        values = [f(p) for p in X.distinct_points()]
        terms = mu * _value_vector(X, values, N)
        partial = math.fsum(terms)
        tail = _structured_tail(W, X, values, N)
        rounding = 8 * _EPS * (math.fsum(np.abs(terms)) + abs(tail))
        logger.debug("exact tail %.17g after %d terms", tail, N)
        return SeriesEstimate(partial, N, rounding, CONVERGENT, tail_center=tail)

    values = np.array([f(p) for p in X.points(N)])
    partial = math.fsum(mu * values)
    T = W.tail_mass(N + 1)
    lo, hi = _range_box(X)
    enclosure = f.bound_over_box(lo, hi)
    if enclosure is not None:
        B, U = enclosure
        return SeriesEstimate(partial, N, max(abs(B), abs(U)) * T, CONVERGENT)

    B = f.declared_lower_bound
    if B is not None:
        shifted = math.fsum(mu * (values - B))
        if shifted > DIVERGENCE_THRESHOLD:
            logger.info("shifted partial sum %.3g exceeds the divergence threshold after %d terms", shifted, N)
            return SeriesEstimate(partial, N, math.inf, DIVERGES)
    logger.warning("no tail bound for %s over the sequence range; series error is unbounded", f.label)
    return SeriesEstimate(partial, N, math.inf, UNBOUNDED_ERROR)


def segment_upper_bound(f: ScalarFunction, x, y) -> float:
    """(f(x))_+ + (f(y))_+, an upper bound for a convex f on the segment [x, y]."""
    return positive_part(f(as_point(x))) + positive_part(f(as_point(y)))


def default_depth(W: WeightSequence, X: BoundedSequence, target: float = TAIL_TARGET) -> int:
    """N with K * tail_mass(N+1) <= target when W has a closed-form depth."""
    return W.default_depth(target / max(X.bound, 1.0))
