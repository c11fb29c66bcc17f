"""Shared domain types: weight sequences, convex domains, point sequences, distributions."""
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from dotenv import load_dotenv
from scipy.optimize import linprog

load_dotenv()

logger = logging.getLogger(__name__)

MEMBERSHIP_TOL = float(os.getenv('CONVEXITY_MEMBERSHIP_TOL', '1e-9'))
MAX_DEPTH = int(os.getenv('CONVEXITY_MAX_DEPTH', '1000000'))
TAIL_PRECISION = int(os.getenv('CONVEXITY_TAIL_PRECISION', '30'))
TAIL_TARGET = float(os.getenv('CONVEXITY_TAIL_TARGET', '1e-10'))
SERIES_DEPTH = int(os.getenv('CONVEXITY_SERIES_DEPTH', '10000'))

PROBABILITY_TOL = 1e-12


class ConvexityError(ValueError):
    """Base class for input and evaluation errors raised by this toolkit."""


class DimensionMismatch(ConvexityError):
    pass


class DepthOverflow(ConvexityError):
    pass


class PreconditionError(ConvexityError):
    pass


class EvaluationError(ConvexityError):
    """f could not be evaluated at a point (log of nonpositive, overflow, ...)."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = None if point is None else [float(v) for v in np.atleast_1d(point)]


# ── Points and scalars ──────────────────────────────────────────────────

def as_point(x, dim: Optional[int] = None) -> np.ndarray:
    """Coerce a scalar or sequence to a 1-D float vector."""
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.ndim != 1:
        raise DimensionMismatch(f"point must be a flat vector, got shape {p.shape}")
    if dim is not None and p.shape[0] != dim:
        raise DimensionMismatch(f"expected a point in R^{dim}, got R^{p.shape[0]}")
    return p


def convex_combination(x, y, t: float) -> np.ndarray:
    """Return t*x + (1-t)*y componentwise."""
    px, py = as_point(x), as_point(y)
    if px.shape != py.shape:
        raise DimensionMismatch(f"cannot combine R^{px.shape[0]} with R^{py.shape[0]}")
    if not 0.0 <= t <= 1.0:
        raise PreconditionError(f"t={t} outside [0,1]")
    return t * px + (1.0 - t) * py


def positive_part(z: float) -> float:
    """max(z, 0)."""
    if not math.isfinite(z):
        raise PreconditionError(f"positive part of non-finite value {z}")
    return max(z, 0.0)


# ── Weight sequences (the class of positive nonincreasing weights summing to 1) ──

@dataclass(frozen=True)
class WeightSequence:
    """Base class for closed-form members of the weight class.

    Indices are 1-based: weight_at(1) is the first weight.
    """
    precision: int = field(default=TAIL_PRECISION, kw_only=True)
    max_depth: int = field(default=MAX_DEPTH, kw_only=True)

    kind = 'abstract'

    def _check_index(self, n: int):
        if n < 1:
            raise PreconditionError(f"weight index must be >= 1, got {n}")
        if n > self.max_depth + 1:
            raise DepthOverflow(f"index {n} exceeds maximum depth {self.max_depth}")

    def weight_at(self, n: int) -> float:
        raise NotImplementedError

    def tail_mass(self, n: int) -> float:
        """Sum of weights with index >= n."""
        raise NotImplementedError

    def residue_tail_mass(self, start: int, step: int) -> float:
        """Sum of weights at indices start, start+step, start+2*step, ..."""
        raise NotImplementedError

    def weights(self, n: int) -> np.ndarray:
        self._check_index(max(n, 1))
        return np.array([self.weight_at(i) for i in range(1, n + 1)])

    def partial_sum(self, n: int) -> float:
        """Sum of the first n weights; partial_sum(0) == 0."""
        if n == 0:
            return 0.0
        return 1.0 - self.tail_mass(n + 1)

    def default_depth(self, target: float = TAIL_TARGET) -> int:
        """Smallest N with tail_mass(N+1) <= target, or SERIES_DEPTH without a closed form."""
        return min(SERIES_DEPTH, self.max_depth)

    @property
    def first(self) -> float:
        return self.weight_at(1)

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class GeometricWeights(WeightSequence):
    """lambda_n = (1 - r) * r**(n-1), so the first weight is 1 - r."""
    ratio: float = 0.5

    kind = 'geometric'

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise PreconditionError(f"geometric ratio must lie in (0,1), got {self.ratio}")

    def weight_at(self, n: int) -> float:
        self._check_index(n)
        return (1.0 - self.ratio) * self.ratio ** (n - 1)

    def tail_mass(self, n: int) -> float:
        self._check_index(n)
        return self.ratio ** (n - 1)

    def residue_tail_mass(self, start: int, step: int) -> float:
        self._check_index(start)
        return self.weight_at(start) / (1.0 - self.ratio ** step)

    def weights(self, n: int) -> np.ndarray:
        self._check_index(max(n, 1))
        return (1.0 - self.ratio) * self.ratio ** np.arange(n, dtype=float)

    def default_depth(self, target: float = TAIL_TARGET) -> int:
        n = math.ceil(math.log(target) / math.log(self.ratio))
        return max(1, min(n, self.max_depth))

    def to_json(self) -> dict:
        return {'kind': self.kind, 'ratio': self.ratio}


@dataclass(frozen=True)
class PrefixWeights(WeightSequence):
    """An explicit finite prefix followed by a geometric tail carrying the remaining mass."""
    prefix: Tuple[float, ...] = ()
    tail_ratio: float = 0.5

    kind = 'explicit-prefix'

    def __post_init__(self):
        object.__setattr__(self, 'prefix', tuple(float(p) for p in self.prefix))
        if not self.prefix:
            raise PreconditionError("explicit prefix must contain at least one weight")
        if not 0.0 < self.tail_ratio < 1.0:
            raise PreconditionError(f"tail ratio must lie in (0,1), got {self.tail_ratio}")
        if any(p <= 0 for p in self.prefix):
            raise PreconditionError("prefix weights must be positive")
        if any(a < b for a, b in zip(self.prefix, self.prefix[1:])):
            raise PreconditionError("prefix weights must be nonincreasing")
        remaining = 1.0 - math.fsum(self.prefix)
        if remaining <= 0:
            raise PreconditionError("prefix must leave positive mass for the geometric tail")
        if remaining * (1.0 - self.tail_ratio) > self.prefix[-1]:
            raise PreconditionError(
                f"first tail weight {remaining * (1.0 - self.tail_ratio):.6g} exceeds "
                f"last prefix weight {self.prefix[-1]:.6g}")

    @property
    def remaining(self) -> float:
        return 1.0 - math.fsum(self.prefix)

    def weight_at(self, n: int) -> float:
        self._check_index(n)
        k = len(self.prefix)
        if n <= k:
            return self.prefix[n - 1]
        return self.remaining * (1.0 - self.tail_ratio) * self.tail_ratio ** (n - k - 1)

    def tail_mass(self, n: int) -> float:
        self._check_index(n)
        k = len(self.prefix)
        if n <= k:
            return math.fsum(self.prefix[n - 1:]) + self.remaining
        return self.remaining * self.tail_ratio ** (n - k - 1)

    def residue_tail_mass(self, start: int, step: int) -> float:
        self._check_index(start)
        k = len(self.prefix)
        head = math.fsum(self.prefix[i - 1] for i in range(start, k + 1, step))
        first_tail = start if start > k else start + math.ceil((k + 1 - start) / step) * step
        return head + self.weight_at(first_tail) / (1.0 - self.tail_ratio ** step)

    def default_depth(self, target: float = TAIL_TARGET) -> int:
        extra = math.log(target / self.remaining) / math.log(self.tail_ratio) if target < self.remaining else 0
        return max(1, min(len(self.prefix) + math.ceil(extra), self.max_depth))

    def to_json(self) -> dict:
        return {'kind': self.kind, 'prefix': list(self.prefix), 'tail_ratio': self.tail_ratio}


@dataclass(frozen=True)
class ZetaWeights(WeightSequence):
    """lambda_n = n**(-p) / zeta(p), p > 1; tails via the Hurwitz zeta function."""
    exponent: float = 2.0
    normalization: float = field(default=0.0, init=False, compare=False)

    kind = 'zeta-like'

    def __post_init__(self):
        if not self.exponent > 1.0:
            raise PreconditionError(f"zeta-like exponent must exceed 1, got {self.exponent}")
        with mpmath.workdps(self.precision):
            object.__setattr__(self, 'normalization', float(mpmath.zeta(self.exponent)))

    def weight_at(self, n: int) -> float:
        self._check_index(n)
        return n ** (-self.exponent) / self.normalization

    def weights(self, n: int) -> np.ndarray:
        self._check_index(max(n, 1))
        return np.arange(1, n + 1, dtype=float) ** (-self.exponent) / self.normalization

    def tail_mass(self, n: int) -> float:
        self._check_index(n)
        if n == 1:
            return 1.0
        with mpmath.workdps(self.precision):
            return float(mpmath.zeta(self.exponent, n) / mpmath.zeta(self.exponent))

    def tail_bracket(self, n: int) -> Tuple[float, float]:
        """Integral-test bounds on tail_mass(n)."""
        self._check_index(n)
        p = self.exponent
        integral = n ** (1.0 - p) / (p - 1.0)
        return integral / self.normalization, (n ** (-p) + integral) / self.normalization

    def residue_tail_mass(self, start: int, step: int) -> float:
        self._check_index(start)
        with mpmath.workdps(self.precision):
            s = mpmath.mpf(step) ** (-self.exponent) * mpmath.zeta(self.exponent, mpmath.mpf(start) / step)
            return float(s / mpmath.zeta(self.exponent))

    def to_json(self) -> dict:
        return {'kind': self.kind, 'exponent': self.exponent}


def weight_at(W: WeightSequence, n: int) -> float:
    return W.weight_at(n)


def tail_mass(W: WeightSequence, n: int) -> float:
    return W.tail_mass(n)


def weights_from_json(data: dict) -> WeightSequence:
    kind = data.get('kind')
    if kind == 'geometric':
        return GeometricWeights(ratio=float(data['ratio']))
    if kind == 'explicit-prefix':
        return PrefixWeights(prefix=tuple(data['prefix']), tail_ratio=float(data.get('tail_ratio', 0.5)))
    if kind == 'zeta-like':
        return ZetaWeights(exponent=float(data['exponent']))
    raise PreconditionError(f"unknown weight sequence kind {kind!r}")


# ── Convex domains ──────────────────────────────────────────────────────

class ConvexDomain:
    """A nonempty convex subset of R^d with exact membership tests."""

    shape = 'abstract'

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    @property
    def witness(self) -> np.ndarray:
        raise NotImplementedError

    def _distance_ok(self, p: np.ndarray, tol: float) -> bool:
        raise NotImplementedError

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        if tol < 0:
            raise PreconditionError("membership tolerance must be nonnegative")
        return self._distance_ok(as_point(x, self.dimension), tol)

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def is_bounded(self) -> bool:
        lo, hi = self.bounding_box()
        return bool(np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n points drawn uniformly from the domain, shape (n, d)."""
        raise NotImplementedError

    def extreme_points(self) -> List[np.ndarray]:
        raise NotImplementedError

    def segment_through(self, point, direction) -> Tuple[float, float]:
        """Range [s_min, s_max] of s with point + s*direction inside the domain."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def _require_bounded(self):
        if not self.is_bounded:
            raise PreconditionError(f"cannot sample the unbounded domain {self.to_json()}")


def _axis_range(p: np.ndarray, d: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> Tuple[float, float]:
    s_min, s_max = -math.inf, math.inf
    for pi, di, a, b in zip(p, d, lo, hi):
        if di > 0:
            s_min, s_max = max(s_min, (a - pi) / di), min(s_max, (b - pi) / di)
        elif di < 0:
            s_min, s_max = max(s_min, (b - pi) / di), min(s_max, (a - pi) / di)
    return s_min, s_max


class Interval(ConvexDomain):
    """Closed interval [a, b] in R; infinite endpoints give rays or the real line."""

    shape = 'interval'

    def __init__(self, a: float, b: float):
        if math.isnan(a) or math.isnan(b) or a > b:
            raise PreconditionError(f"empty interval [{a}, {b}]")
        self.a, self.b = float(a), float(b)

    @property
    def dimension(self) -> int:
        return 1

    @property
    def witness(self) -> np.ndarray:
        if math.isfinite(self.a):
            return np.array([self.a])
        if math.isfinite(self.b):
            return np.array([self.b])
        return np.array([0.0])

    def _distance_ok(self, p, tol):
        return self.a - tol <= p[0] <= self.b + tol

    def bounding_box(self):
        return np.array([self.a]), np.array([self.b])

    def sample(self, rng, n):
        self._require_bounded()
        return rng.uniform(self.a, self.b, size=(n, 1))

    def extreme_points(self):
        self._require_bounded()
        return [np.array([self.a]), np.array([self.b])] if self.a < self.b else [np.array([self.a])]

    def segment_through(self, point, direction):
        return _axis_range(as_point(point, 1), as_point(direction, 1), [self.a], [self.b])

    def to_json(self):
        return {'shape': self.shape, 'a': self.a, 'b': self.b}

    def __repr__(self):
        return f"Interval({self.a}, {self.b})"


class Box(ConvexDomain):
    shape = 'box'

    def __init__(self, lower, upper):
        self.lower, self.upper = as_point(lower), as_point(upper)
        if self.lower.shape != self.upper.shape:
            raise DimensionMismatch("box bounds have different dimensions")
        if np.any(self.lower > self.upper):
            raise PreconditionError("box lower bound exceeds upper bound")

    @property
    def dimension(self):
        return self.lower.shape[0]

    @property
    def witness(self):
        return np.where(np.isfinite(self.lower), self.lower, np.where(np.isfinite(self.upper), self.upper, 0.0))

    def _distance_ok(self, p, tol):
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    def bounding_box(self):
        return self.lower.copy(), self.upper.copy()

    def sample(self, rng, n):
        self._require_bounded()
        return rng.uniform(self.lower, self.upper, size=(n, self.dimension))

    def extreme_points(self):
        self._require_bounded()
        if self.dimension > 4:
            return [self.lower.copy(), self.upper.copy()]
        corners = []
        for mask in range(2 ** self.dimension):
            bits = np.array([(mask >> j) & 1 for j in range(self.dimension)], dtype=bool)
            corners.append(np.where(bits, self.upper, self.lower))
        return corners

    def segment_through(self, point, direction):
        d = self.dimension
        return _axis_range(as_point(point, d), as_point(direction, d), self.lower, self.upper)

    def to_json(self):
        return {'shape': self.shape, 'lower': self.lower.tolist(), 'upper': self.upper.tolist()}


class Ball(ConvexDomain):
    """Closed Euclidean ball."""

    shape = 'ball'

    def __init__(self, center, radius: float):
        self.center = as_point(center)
        if not radius >= 0 or not math.isfinite(radius):
            raise PreconditionError(f"ball radius must be finite and nonnegative, got {radius}")
        self.radius = float(radius)

    @property
    def dimension(self):
        return self.center.shape[0]

    @property
    def witness(self):
        return self.center.copy()

    def _distance_ok(self, p, tol):
        return float(np.linalg.norm(p - self.center)) <= self.radius + tol

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def sample(self, rng, n):
        d = self.dimension
        g = rng.standard_normal(size=(n, d))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        r = self.radius * rng.uniform(size=(n, 1)) ** (1.0 / d)
        return self.center + g / norms * r

    def extreme_points(self):
        pts = []
        for j in range(self.dimension):
            e = np.zeros(self.dimension)
            e[j] = self.radius
            pts.extend([self.center + e, self.center - e])
        return pts

    def segment_through(self, point, direction):
        p, d = as_point(point, self.dimension), as_point(direction, self.dimension)
        w = p - self.center
        a, b, c = float(d @ d), float(2 * w @ d), float(w @ w) - self.radius ** 2
        if a == 0:
            return (-math.inf, math.inf) if c <= 0 else (0.0, 0.0)
        disc = b * b - 4 * a * c
        if disc < 0:
            return 0.0, 0.0
        root = math.sqrt(disc)
        return (-b - root) / (2 * a), (-b + root) / (2 * a)

    def to_json(self):
        return {'shape': self.shape, 'center': self.center.tolist(), 'radius': self.radius}


class HalfSpaceIntersection(ConvexDomain):
    """{x : normal_i . x <= offset_i for all i}; the Chebyshev centre is the witness."""

    shape = 'halfspaces'

    def __init__(self, normals, offsets):
        self.normals = np.atleast_2d(np.asarray(normals, dtype=float))
        self.offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
        if self.normals.shape[0] != self.offsets.shape[0]:
            raise DimensionMismatch("one offset is required per normal")
        self._norms = np.linalg.norm(self.normals, axis=1)
        if np.any(self._norms == 0):
            raise PreconditionError("half-space normals must be nonzero")
        self._witness = self._chebyshev_center()
        self._box: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self._vertices: Optional[List[np.ndarray]] = None

    def _chebyshev_center(self) -> np.ndarray:
        d = self.dimension
        # maximize r subject to n.x + r*|n| <= o, 0 <= r <= 1
        c = np.zeros(d + 1)
        c[-1] = -1.0
        A = np.hstack([self.normals, self._norms[:, None]])
        res = linprog(c, A_ub=A, b_ub=self.offsets, bounds=[(None, None)] * d + [(0, 1)], method='highs')
        if res.status != 0:
            raise PreconditionError(f"half-space intersection is empty ({res.message})")
        logger.debug("Chebyshev centre %s (radius %.3g)", res.x[:-1], res.x[-1])
        return res.x[:-1]

    def _extreme_in(self, objective: np.ndarray) -> Optional[np.ndarray]:
        res = linprog(objective, A_ub=self.normals, b_ub=self.offsets,
                      bounds=[(None, None)] * self.dimension, method='highs')
        return res.x if res.status == 0 else None

    @property
    def dimension(self):
        return self.normals.shape[1]

    @property
    def witness(self):
        return self._witness.copy()

    def _distance_ok(self, p, tol):
        return bool(np.all(self.normals @ p - self.offsets <= tol * self._norms))

    def bounding_box(self):
        if self._box is None:
            lo, hi, vertices = [], [], []
            for j in range(self.dimension):
                e = np.zeros(self.dimension)
                e[j] = 1.0
                low, high = self._extreme_in(e), self._extreme_in(-e)
                lo.append(low[j] if low is not None else -math.inf)
                hi.append(high[j] if high is not None else math.inf)
                vertices.extend(v for v in (low, high) if v is not None)
            self._box = (np.array(lo), np.array(hi))
            self._vertices = vertices
        return self._box[0].copy(), self._box[1].copy()

    def sample(self, rng, n, max_tries: int = 10000):
        self._require_bounded()
        lo, hi = self.bounding_box()
        out = []
        tries = 0
        while len(out) < n:
            tries += 1
            if tries > max_tries:
                raise PreconditionError("rejection sampling of the half-space intersection is not accepting points")
            batch = rng.uniform(lo, hi, size=(max(n, 16), self.dimension))
            out.extend(p for p in batch if self._distance_ok(p, 0.0))
        return np.array(out[:n])

    def extreme_points(self):
        self._require_bounded()
        unique: List[np.ndarray] = []
        for v in self._vertices:
            if not any(np.allclose(v, u) for u in unique):
                unique.append(v)
        return unique

    def segment_through(self, point, direction):
        p, d = as_point(point, self.dimension), as_point(direction, self.dimension)
        slope = self.normals @ d
        slack = self.offsets - self.normals @ p
        s_min, s_max = -math.inf, math.inf
        for a, b in zip(slope, slack):
            if a > 0:
                s_max = min(s_max, b / a)
            elif a < 0:
                s_min = max(s_min, b / a)
        return s_min, s_max

    def to_json(self):
        return {'shape': self.shape, 'normals': self.normals.tolist(), 'offsets': self.offsets.tolist()}


def real_line() -> Interval:
    return Interval(-math.inf, math.inf)


def domain_contains(D: ConvexDomain, x, tol: float = MEMBERSHIP_TOL) -> bool:
    return D.contains(x, tol)


def domain_from_json(data: dict) -> ConvexDomain:
    shape = data.get('shape')
    if shape == 'interval':
        return Interval(float(data.get('a', -math.inf)), float(data.get('b', math.inf)))
    if shape == 'box':
        return Box(data['lower'], data['upper'])
    if shape == 'ball':
        return Ball(data['center'], float(data['radius']))
    if shape == 'halfspaces':
        return HalfSpaceIntersection(data['normals'], data['offsets'])
    raise PreconditionError(f"unknown domain shape {shape!r}")


# ── Bounded point sequences ─────────────────────────────────────────────

class BoundedSequence:
    """An infinite sequence x_1, x_2, ... with a declared norm bound K."""

    generator = 'abstract'

    def __init__(self, bound: Optional[float] = None):
        self._declared = bound

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    @property
    def bound(self) -> float:
        return self._declared if self._declared is not None else self._natural_bound()

    def _natural_bound(self) -> float:
        raise NotImplementedError

    def _check_declared(self):
        if self._declared is not None:
            if self._declared < 0:
                raise PreconditionError("declared bound must be nonnegative")
            if self._natural_bound() > self._declared + 1e-12:
                raise PreconditionError(
                    f"declared bound {self._declared} is smaller than sup norm {self._natural_bound()}")

    def point(self, i: int) -> np.ndarray:
        """The i-th point, 1-based."""
        return self.points(i)[i - 1]

    def points(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def distinct_points(self) -> List[np.ndarray]:
        """All points the sequence can produce, for membership checks."""
        raise NotImplementedError

    def exact_weighted_sum(self, W: WeightSequence) -> Optional[np.ndarray]:
        """sum_i lambda_i x_i computed from tail masses, or None if no exact form exists."""
        return None

    def to_json(self) -> dict:
        raise NotImplementedError


class FiniteSupportSequence(BoundedSequence):
    """x_1..x_k given explicitly, then the fill point repeated forever."""

    generator = 'finite-support'

    def __init__(self, support: Sequence, fill, bound: Optional[float] = None):
        super().__init__(bound)
        self.fill = as_point(fill)
        self.support = [as_point(p, self.fill.shape[0]) for p in support]
        self._check_declared()

    @property
    def dimension(self):
        return self.fill.shape[0]

    def _natural_bound(self):
        return max(float(np.linalg.norm(p)) for p in self.support + [self.fill])

    def points(self, n):
        out = np.tile(self.fill, (n, 1))
        k = min(n, len(self.support))
        if k:
            out[:k] = np.array(self.support[:k])
        return out

    def distinct_points(self):
        return self.support + [self.fill]

    def exact_weighted_sum(self, W):
        k = len(self.support)
        head = np.zeros(self.dimension)
        for i, p in enumerate(self.support, 1):
            head = head + W.weight_at(i) * p
        return head + W.tail_mass(k + 1) * self.fill

    def to_json(self):
        return {'generator': self.generator, 'support': [p.tolist() for p in self.support],
                'fill': self.fill.tolist(), 'bound': self.bound}


class PeriodicSequence(BoundedSequence):
    generator = 'periodic'

    def __init__(self, cycle: Sequence, bound: Optional[float] = None):
        super().__init__(bound)
        if len(cycle) == 0:
            raise PreconditionError("periodic sequence needs a nonempty cycle")
        first = as_point(cycle[0])
        self.cycle = [as_point(p, first.shape[0]) for p in cycle]
        self._check_declared()

    @property
    def dimension(self):
        return self.cycle[0].shape[0]

    def _natural_bound(self):
        return max(float(np.linalg.norm(p)) for p in self.cycle)

    def points(self, n):
        m = len(self.cycle)
        return np.array([self.cycle[i % m] for i in range(n)]).reshape(n, self.dimension)

    def distinct_points(self):
        return list(self.cycle)

    def exact_weighted_sum(self, W):
        m = len(self.cycle)
        total = np.zeros(self.dimension)
        for j, p in enumerate(self.cycle, 1):
            total = total + W.residue_tail_mass(j, m) * p
        return total

    def to_json(self):
        return {'generator': self.generator, 'cycle': [p.tolist() for p in self.cycle], 'bound': self.bound}


class ConstantSequence(BoundedSequence):
    generator = 'constant'

    def __init__(self, value, bound: Optional[float] = None):
        super().__init__(bound)
        self.value = as_point(value)
        self._check_declared()

    @property
    def dimension(self):
        return self.value.shape[0]

    def _natural_bound(self):
        return float(np.linalg.norm(self.value))

    def points(self, n):
        return np.tile(self.value, (n, 1))

    def distinct_points(self):
        return [self.value]

    def exact_weighted_sum(self, W):
        return self.value.copy()

    def to_json(self):
        return {'generator': self.generator, 'point': self.value.tolist(), 'bound': self.bound}


class SampledSequence(BoundedSequence):
    """i.i.d. points of a bounded domain; point i depends only on (seed, i)."""

    generator = 'sampled'

    def __init__(self, domain: ConvexDomain, seed: int = 0, bound: Optional[float] = None):
        super().__init__(bound)
        if not domain.is_bounded:
            raise PreconditionError("sampled sequences need a bounded domain")
        self.domain = domain
        self.seed = int(seed)
        self._cache = np.empty((0, domain.dimension))
        self._check_declared()

    @property
    def dimension(self):
        return self.domain.dimension

    def _natural_bound(self):
        if isinstance(self.domain, Ball):
            return float(np.linalg.norm(self.domain.center)) + self.domain.radius
        lo, hi = self.domain.bounding_box()
        return float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))

    def points(self, n):
        if n > self._cache.shape[0]:
            start = self._cache.shape[0]
            fresh = [self.domain.sample(np.random.default_rng([self.seed, i]), 1)[0] for i in range(start, n)]
            self._cache = np.vstack([self._cache, np.array(fresh).reshape(-1, self.dimension)])
        return self._cache[:n].copy()

    def distinct_points(self):
        return []

    def to_json(self):
        return {'generator': self.generator, 'domain': self.domain.to_json(), 'seed': self.seed, 'bound': self.bound}


def sequence_from_json(data: dict) -> BoundedSequence:
    generator = data.get('generator')
    bound = data.get('bound')
    if generator == 'finite-support':
        return FiniteSupportSequence(data['support'], data['fill'], bound)
    if generator == 'periodic':
        return PeriodicSequence(data['cycle'], bound)
    if generator == 'constant':
        return ConstantSequence(data['point'], bound)
    if generator == 'sampled':
        return SampledSequence(domain_from_json(data['domain']), int(data.get('seed', 0)), bound)
    raise PreconditionError(f"unknown sequence generator {generator!r}")


# ── Discrete distributions ──────────────────────────────────────────────

@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely many atoms (point, probability); the law of a discrete random vector."""
    atoms: Tuple[Tuple[Tuple[float, ...], float], ...]

    def __post_init__(self):
        if not self.atoms:
            raise PreconditionError("a distribution needs at least one atom")
        cleaned = tuple((tuple(float(v) for v in as_point(p)), float(q)) for p, q in self.atoms)
        dims = {len(p) for p, _ in cleaned}
        if len(dims) != 1:
            raise DimensionMismatch("atoms live in different dimensions")
        if any(q < 0 or not math.isfinite(q) for _, q in cleaned):
            raise PreconditionError("probabilities must be finite and nonnegative")
        total = math.fsum(q for _, q in cleaned)
        if abs(total - 1.0) > PROBABILITY_TOL:
            raise PreconditionError(f"probabilities sum to {total!r}, not 1")
        if len({p for p, _ in cleaned}) != len(cleaned):
            raise PreconditionError("atoms must be pairwise distinct")
        object.__setattr__(self, 'atoms', cleaned)

    @classmethod
    def from_pairs(cls, pairs) -> 'DiscreteDistribution':
        return cls(tuple((tuple(np.atleast_1d(p)), q) for p, q in pairs))

    @property
    def dimension(self) -> int:
        return len(self.atoms[0][0])

    @property
    def points(self) -> np.ndarray:
        return np.array([p for p, _ in self.atoms])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([q for _, q in self.atoms])

    def mean(self) -> np.ndarray:
        """E(xi), coordinatewise compensated sums."""
        pts = self.points
        return np.array([math.fsum(q * pts[i, j] for i, (_, q) in enumerate(self.atoms))
                         for j in range(self.dimension)])

    def expect(self, fn: Callable[[np.ndarray], float]) -> float:
        return math.fsum(q * fn(np.array(p)) for p, q in self.atoms if q > 0)

    def to_json(self) -> dict:
        return {'atoms': [{'point': list(p), 'probability': q} for p, q in self.atoms]}


def distribution_from_json(data: dict) -> DiscreteDistribution:
    return DiscreteDistribution.from_pairs((a['point'], a['probability']) for a in data['atoms'])


def random_distribution(D: ConvexDomain, rng: np.random.Generator, max_atoms: int = 50) -> DiscreteDistribution:
    """Dirichlet-weighted atoms drawn uniformly from D."""
    k = int(rng.integers(1, max_atoms + 1))
    pts = D.sample(rng, k)
    probs = rng.dirichlet(np.ones(k))
    probs = probs / math.fsum(probs)
    merged: Dict[Tuple[float, ...], float] = {}
    for p, q in zip(pts, probs):
        key = tuple(float(v) for v in p)
        merged[key] = merged.get(key, 0.0) + float(q)
    return DiscreteDistribution(tuple(merged.items()))


def empirical_distribution(points: np.ndarray) -> DiscreteDistribution:
    """Uniform weights on the given sample, duplicates merged."""
    merged: Dict[Tuple[float, ...], int] = {}
    for p in np.atleast_2d(points):
        key = tuple(float(v) for v in p)
        merged[key] = merged.get(key, 0) + 1
    n = sum(merged.values())
    return DiscreteDistribution(tuple((k, c / n) for k, c in merged.items()))


# ── Convexity parameters ────────────────────────────────────────────────

@dataclass(frozen=True)
class ConvexityParams:
    """(t, s): the combination weight and the value weight."""
    t: float
    s: float

    def __post_init__(self):
        for name, v in (('t', self.t), ('s', self.s)):
            if not 0.0 <= v <= 1.0:
                raise PreconditionError(f"{name}={v} outside [0,1]")
