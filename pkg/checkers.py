"""Verdicts for the convexity inequalities: pointwise definitions, Jensen, infinite combinations, brackets.

A "holds" verdict only ever means no violation was found on the samples examined;
a "violated" verdict carries a witness that replays to the same gap.
"""
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

import numpy as np

from core import (SERIES_DEPTH, BoundedSequence, ConvexDomain, ConvexityParams, DimensionMismatch,
                  DiscreteDistribution, EvaluationError, PreconditionError, SampledSequence, WeightSequence, as_point,
                  convex_combination, distribution_from_json, empirical_distribution, random_distribution,
                  sequence_from_json, weights_from_json)
from expansion import RationalExpansion, combination_pushforward, lambda_expand
from funcparse import KNOWN_CONVEX, ScalarFunction
from series import (CONVERGENT, DIVERGES, UNBOUNDED_ERROR, SeriesEstimate, default_depth,
                    point_series_enclosure, segment_upper_bound, weighted_function_series)

logger = logging.getLogger(__name__)

DEFAULT_TOL = float(os.getenv('CONVEXITY_DEFAULT_TOL', '1e-9'))
DEFAULT_SAMPLES = 1000

HOLDS = 'holds-on-samples'
VIOLATED = 'violated'
INCONCLUSIVE = 'inconclusive'


@dataclass
class Verdict:
    status: str
    gap: float
    samples_checked: int
    tolerance: float
    witness: Optional[dict] = None
    detail: str = ''

    @property
    def violated(self) -> bool:
        return self.status == VIOLATED

    def to_dict(self) -> dict:
        return {
            'status': self.status,
            'gap': self.gap,
            'samples_checked': self.samples_checked,
            'tolerance': self.tolerance,
            'witness': self.witness,
            'detail': self.detail,
        }


@dataclass
class BracketReport:
    """f(m) <= sum lambda_i f(x_i) <= t* f(a) + (1 - t*) f(b) with m = t* a + (1 - t*) b."""
    t_star: float
    m: float
    lhs: float
    mid: SeriesEstimate
    rhs: float
    margins: Tuple[float, float]   # (rhs - mid, mid - lhs)
    consistent: bool

    def to_dict(self) -> dict:
        return {
            't_star': self.t_star,
            'm': self.m,
            'lhs': self.lhs,
            'mid': self.mid.to_dict(),
            'rhs': self.rhs,
            'margins': {'rhs_minus_mid': self.margins[0], 'mid_minus_lhs': self.margins[1]},
            'consistent': self.consistent,
        }


def _require_same_dimension(f: ScalarFunction, d: int):
    if f.arity != d:
        raise DimensionMismatch(f"f takes R^{f.arity} but the domain is R^{d}")


def _inconclusive(e: EvaluationError, samples: int, tol: float) -> Verdict:
    logger.warning("Evaluation failed at %s: %s", e.point, e)
    return Verdict(INCONCLUSIVE, gap=math.nan, samples_checked=samples, tolerance=tol,
                   detail=f"evaluation error at {e.point}: {e}")


# ── Pointwise definitions ───────────────────────────────────────────────

def _pair_pool(D: ConvexDomain, rng: np.random.Generator, samples: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Ordered pairs of distinct extreme points first, then uniform random pairs."""
    extreme = D.extreme_points()
    pairs = [(x, y) for i, x in enumerate(extreme) for j, y in enumerate(extreme) if i != j][:samples]
    rest = samples - len(pairs)
    if rest > 0:
        pts = D.sample(rng, 2 * rest)
        pairs.extend((pts[2 * k], pts[2 * k + 1]) for k in range(rest))
    return pairs


def ts_gap(f: ScalarFunction, x, y, t: float, s: float) -> Tuple[float, float, float]:
    """(lhs, rhs, lhs - rhs) for f(tx + (1-t)y) <= s f(x) + (1-s) f(y)."""
    lhs = f(convex_combination(x, y, t))
    rhs = s * f(x) + (1.0 - s) * f(y)
    return lhs, rhs, lhs - rhs


def _pairwise_check(f: ScalarFunction, pairs: Iterable[Tuple[np.ndarray, np.ndarray]], t: float, s: float,
                    tol: float, check: str) -> Verdict:
    worst = -math.inf
    n = 0
    for x, y in pairs:
        n += 1
        try:
            lhs, rhs, gap = ts_gap(f, x, y, t, s)
        except EvaluationError as e:
            return _inconclusive(e, n, tol)
        if gap > tol:
            witness = {'check': check, 'x': x.tolist(), 'y': y.tolist(), 't': t, 's': s, 'lhs': lhs, 'rhs': rhs}
            logger.info("%s violated after %d pair(s): gap %.6g", check, n, gap)
            return Verdict(VIOLATED, gap=gap, samples_checked=n, tolerance=tol, witness=witness)
        worst = max(worst, gap)
    return Verdict(HOLDS, gap=worst, samples_checked=n, tolerance=tol)


def check_t_convexity(f: ScalarFunction, D: ConvexDomain, t: float, samples: int = DEFAULT_SAMPLES,
                      tol: float = DEFAULT_TOL, seed: int = 0) -> Verdict:
    """Test f(tx + (1-t)y) <= t f(x) + (1-t) f(y) on sampled pairs of D."""
    if not 0.0 <= t <= 1.0:
        raise PreconditionError(f"t outside [0,1]: {t}")
    if samples < 1:
        raise PreconditionError("at least one sample is required")
    _require_same_dimension(f, D.dimension)
    if t in (0.0, 1.0):
        return Verdict(HOLDS, gap=0.0, samples_checked=0, tolerance=tol,
                       detail="every function is 0-convex and 1-convex")
    pairs = _pair_pool(D, np.random.default_rng(seed), samples)
    return _pairwise_check(f, pairs, t, t, tol, 't-convexity')


def check_ts_convexity(f: ScalarFunction, D: ConvexDomain, params: ConvexityParams,
                       samples: int = DEFAULT_SAMPLES, tol: float = DEFAULT_TOL, seed: int = 0) -> Verdict:
    if samples < 1:
        raise PreconditionError("at least one sample is required")
    _require_same_dimension(f, D.dimension)
    pairs = _pair_pool(D, np.random.default_rng(seed), samples)
    return _pairwise_check(f, pairs, params.t, params.s, tol, 'ts-convexity')


def check_implication_chain(f: ScalarFunction, D: ConvexDomain, t: float, samples: int = 10_000,
                            tol: float = DEFAULT_TOL, seed: int = 0) -> dict:
    """t-convexity and midpoint convexity over one shared pool of pairs.

    A t-convex function with t in (0,1) is midpoint convex, so a pool that
    shows no t-violation should not show a midpoint violation either.
    """
    if not 0.0 < t < 1.0:
        raise PreconditionError(f"t must lie in (0,1), got {t}")
    _require_same_dimension(f, D.dimension)
    pairs = _pair_pool(D, np.random.default_rng(seed), samples)
    t_verdict = _pairwise_check(f, pairs, t, t, tol, 't-convexity')
    jensen_verdict = _pairwise_check(f, pairs, 0.5, 0.5, tol, 't-convexity')
    consistent = not (t_verdict.status == HOLDS and jensen_verdict.status == VIOLATED)
    if not consistent:
        logger.warning("pool shows t=%g convexity but a midpoint violation", t)
    return {'t': t_verdict, 'jensen': jensen_verdict, 'consistent': consistent}


# ── Jensen inequality ───────────────────────────────────────────────────

def _check_atoms(D: ConvexDomain, dist: DiscreteDistribution):
    if dist.dimension != D.dimension:
        raise DimensionMismatch(f"distribution lives in R^{dist.dimension}, domain in R^{D.dimension}")
    for p, _ in dist.atoms:
        if not D.contains(p):
            raise PreconditionError(f"atom {list(p)} lies outside the domain")


def jensen_gap(f: ScalarFunction, dist: DiscreteDistribution, outcome: Optional[DiscreteDistribution] = None):
    """(lhs, rhs, gap) for f(E xi) <= E f(eta); eta defaults to xi."""
    lhs = f(dist.mean())
    rhs = (outcome or dist).expect(f)
    return lhs, rhs, lhs - rhs


def _jensen_verdict(f, D, dist, outcome, tol, check) -> Verdict:
    mean = dist.mean()
    if not D.contains(mean):
        return Verdict(INCONCLUSIVE, gap=math.nan, samples_checked=len(dist.atoms), tolerance=tol,
                       detail=f"expectation {mean.tolist()} fell outside the domain under rounding")
    try:
        lhs, rhs, gap = jensen_gap(f, dist, outcome)
    except EvaluationError as e:
        return _inconclusive(e, len(dist.atoms), tol)
    n = len(dist.atoms)
    if gap > tol:
        witness = {'check': check, 'distribution': dist.to_json(), 'mean': mean.tolist(), 'lhs': lhs, 'rhs': rhs}
        if outcome is not None:
            witness['outcome'] = outcome.to_json()
        return Verdict(VIOLATED, gap=gap, samples_checked=n, tolerance=tol, witness=witness)
    return Verdict(HOLDS, gap=gap, samples_checked=n, tolerance=tol)


def check_jensen_discrete(f: ScalarFunction, D: ConvexDomain, dist: DiscreteDistribution,
                          tol: float = DEFAULT_TOL) -> Verdict:
    """f(E xi) <= E f(xi) for a finitely supported random vector with atoms in D."""
    _require_same_dimension(f, D.dimension)
    _check_atoms(D, dist)
    return _jensen_verdict(f, D, dist, None, tol, 'jensen-discrete')


def check_jensen_coupled(f: ScalarFunction, D: ConvexDomain, xi: DiscreteDistribution, eta: DiscreteDistribution,
                         tol: float = DEFAULT_TOL) -> Verdict:
    """f(E xi) <= E f(eta) for two laws on a common finite range."""
    _require_same_dimension(f, D.dimension)
    _check_atoms(D, xi)
    _check_atoms(D, eta)
    if {p for p, _ in xi.atoms} != {p for p, _ in eta.atoms}:
        raise PreconditionError("xi and eta must share the same range of atoms")
    return _jensen_verdict(f, D, xi, eta, tol, 'jensen-coupled')


def jensen_suite(f: ScalarFunction, D: ConvexDomain, trials: int = 1000, max_atoms: int = 50,
                 tol: float = DEFAULT_TOL, seed: int = 0) -> Verdict:
    """check_jensen_discrete over seeded random distributions; the first violation wins."""
    _require_same_dimension(f, D.dimension)
    rng = np.random.default_rng(seed)
    worst = -math.inf
    atoms = 0
    for i in range(trials):
        dist = random_distribution(D, rng, max_atoms)
        verdict = check_jensen_discrete(f, D, dist, tol)
        atoms += verdict.samples_checked
        if verdict.status != HOLDS:
            verdict.samples_checked = atoms
            verdict.detail = verdict.detail or f"trial {i}"
            return verdict
        worst = max(worst, verdict.gap)
    logger.info("Jensen suite: %d distributions, %d atoms, worst gap %.3g", trials, atoms, worst)
    return Verdict(HOLDS, gap=worst, samples_checked=atoms, tolerance=tol)


def check_jensen_monte_carlo(f: ScalarFunction, D: ConvexDomain, draws: int = 10_000,
                             tol: float = DEFAULT_TOL, seed: int = 0) -> Verdict:
    """Jensen on the empirical law of uniform draws from D, a stand-in for a continuous law."""
    _require_same_dimension(f, D.dimension)
    dist = empirical_distribution(D.sample(np.random.default_rng(seed), draws))
    verdict = check_jensen_discrete(f, D, dist, tol)
    verdict.detail = verdict.detail or f"empirical law of {draws} uniform draws"
    return verdict


# ── Infinite combinations ───────────────────────────────────────────────

@dataclass
class CombinationSides:
    lhs: float
    lhs_radius: float
    rhs: SeriesEstimate
    argument: np.ndarray
    argument_radius: float

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs.value


def combination_depth(W_lambda: WeightSequence, W_mu: WeightSequence, X: BoundedSequence) -> int:
    return min(SERIES_DEPTH, max(default_depth(W_lambda, X), default_depth(W_mu, X)))


def combination_sides(f: ScalarFunction, W_lambda: WeightSequence, W_mu: WeightSequence,
                      X: BoundedSequence, N: int) -> CombinationSides:
    """Evaluate f(sum lambda_i x_i) and sum mu_i f(x_i) with their error radii."""
    center, radius = point_series_enclosure(W_lambda, X, N)
    lhs = f(center)
    lhs_radius = 0.0
    if radius > 0 and f.is_builtin:
        lhs_radius = f.lipschitz(center - radius, center + radius) * radius
    rhs = weighted_function_series(W_mu, f, X, N)
    return CombinationSides(lhs, lhs_radius, rhs, center, radius)


def _membership_points(X: BoundedSequence, N: int) -> List[np.ndarray]:
    """Points to test against a domain: the distinct values of X, or for a sampled
    sequence its first N draws together with the extreme points it is drawn from."""
    if isinstance(X, SampledSequence):
        return list(X.points(N)) + list(X.domain.extreme_points())
    return X.distinct_points()


def check_infinite_combination(f: ScalarFunction, D: ConvexDomain, W_lambda: WeightSequence,
                               W_mu: WeightSequence, X: BoundedSequence, N: Optional[int] = None,
                               tol: float = DEFAULT_TOL) -> Verdict:
    """f(sum lambda_i x_i) <= sum mu_i f(x_i) for one bounded sequence in D."""
    _require_same_dimension(f, D.dimension)
    if X.dimension != D.dimension:
        raise DimensionMismatch(f"sequence lives in R^{X.dimension}, domain in R^{D.dimension}")
    N = N or combination_depth(W_lambda, W_mu, X)
    for p in _membership_points(X, N):
        if not D.contains(p):
            raise PreconditionError(f"sequence point {p.tolist()} lies outside the domain")
    try:
        sides = combination_sides(f, W_lambda, W_mu, X, N)
    except EvaluationError as e:
        return _inconclusive(e, N, tol)

    if sides.argument_radius > tol / 10 and not f.is_builtin:
        return Verdict(INCONCLUSIVE, gap=math.nan, samples_checked=N, tolerance=tol,
                       detail=f"left argument known only to radius {sides.argument_radius:.3g} and f has no "
                              f"known modulus of continuity")
    rhs = sides.rhs
    if rhs.classification == UNBOUNDED_ERROR:
        return Verdict(INCONCLUSIVE, gap=math.nan, samples_checked=N, tolerance=tol,
                       detail="right-hand series has no certified tail bound")
    if rhs.classification == DIVERGES:
        return Verdict(HOLDS, gap=-math.inf, samples_checked=N, tolerance=tol,
                       detail="right-hand series diverges to +infinity")

    gap = sides.gap
    if sides.lhs - sides.lhs_radius > rhs.upper + tol:
        witness = {
            'check': 'infinite-combination',
            'sequence': X.to_json(),
            'lambda': W_lambda.to_json(),
            'mu': W_mu.to_json(),
            'depth': N,
            'lhs': sides.lhs,
            'rhs': rhs.value,
        }
        logger.info("infinite combination violated: lhs %.10g > rhs %.10g", sides.lhs, rhs.value)
        return Verdict(VIOLATED, gap=gap, samples_checked=N, tolerance=tol, witness=witness)
    return Verdict(HOLDS, gap=gap, samples_checked=N, tolerance=tol)


def reduction_to_ts(W_lambda: WeightSequence, W_mu: WeightSequence) -> ConvexityParams:
    """(lambda_1, mu_1): taking x_1 = x and x_i = y afterwards reduces the inequality to (t,s)-convexity."""
    return ConvexityParams(t=W_lambda.first, s=W_mu.first)


# ── Bracketing ──────────────────────────────────────────────────────────

def pavic_bracket(f: ScalarFunction, a: float, b: float, W: WeightSequence, X: BoundedSequence,
                  N: Optional[int] = None, tol: float = DEFAULT_TOL) -> BracketReport:
    """Locate m = sum lambda_i x_i in [a, b] and evaluate the three sides of the sandwich."""
    if not a < b:
        raise PreconditionError(f"degenerate bracket [{a}, {b}]")
    if f.arity != 1 or X.dimension != 1:
        raise DimensionMismatch("bracketing works on the real line only")
    N = N or min(SERIES_DEPTH, default_depth(W, X))
    for p in _membership_points(X, N):
        if not a - tol <= p[0] <= b + tol:
            raise PreconditionError(f"sequence point {p[0]} lies outside [{a}, {b}]")
    center, radius = point_series_enclosure(W, X, N)
    m = float(center[0])
    t_star = min(1.0, max(0.0, (b - m) / (b - a)))
    lhs = f(np.array([m]))
    lhs_radius = f.lipschitz(center - radius, center + radius) * radius if (radius and f.is_builtin) else 0.0
    mid = weighted_function_series(W, f, X, N)
    rhs = t_star * f(np.array([a])) + (1.0 - t_star) * f(np.array([b]))
    margins = (rhs - mid.value, mid.value - lhs)
    consistent = (lhs - lhs_radius <= mid.upper + tol) and (mid.lower <= rhs + tol)
    if not consistent and f.convexity_tag == KNOWN_CONVEX:
        logger.error("bracket inconsistent for known-convex %s: lhs %r mid %r rhs %r", f.label, lhs, mid.value, rhs)
    return BracketReport(t_star=t_star, m=m, lhs=lhs, mid=mid, rhs=rhs, margins=margins, consistent=consistent)


# ── Proof pipeline and diagnostics ──────────────────────────────────────

@dataclass
class PipelineReport:
    expansion: RationalExpansion
    combination: float            # f(tx + (1-t)y)
    series: SeriesEstimate        # sum mu_i f(z_i)
    segment_bound: float          # (f(x))_+ + (f(y))_+
    slack: float
    holds: bool = field(default=False)

    def to_dict(self) -> dict:
        return {
            'expansion': self.expansion.to_json(),
            'combination': self.combination,
            'series': self.series.to_dict(),
            'segment_bound': self.segment_bound,
            'slack': self.slack,
            'holds': self.holds,
        }


def proof_pipeline(f: ScalarFunction, D: ConvexDomain, x, y, t: float, W_lambda: WeightSequence,
                   W_mu: Optional[WeightSequence] = None, N: int = 40, denominator_bound: int = 4096,
                   tol: float = DEFAULT_TOL) -> PipelineReport:
    """Expand t, push the digits forward onto [x, y] and compare both ends of the chain

        f(tx + (1-t)y) <= sum mu_i f(z_i) <= (f(x))_+ + (f(y))_+.
    """
    W_mu = W_mu or W_lambda
    px, py = as_point(x, D.dimension), as_point(y, D.dimension)
    for p in (px, py):
        if not D.contains(p):
            raise PreconditionError(f"{p.tolist()} lies outside the domain")
    E = lambda_expand(W_lambda, t, N, denominator_bound)
    Z = combination_pushforward(E, px, py)
    combination = f(convex_combination(px, py, t))
    series = weighted_function_series(W_mu, f, Z, N)
    upper = segment_upper_bound(f, px, py)

    # the pushed-forward sum misses tx + (1-t)y by r_{N+1} * |x - y|
    offset = abs(E.remainders[-1]) * float(np.linalg.norm(px - py))
    if f.is_builtin:
        lo, hi = np.minimum(px, py), np.maximum(px, py)
        slack = f.lipschitz(lo, hi) * offset
    else:
        slack = offset
    holds = combination <= series.upper + slack + tol and series.lower <= upper + tol
    logger.info("pipeline t=%.6g: f(comb)=%.10g series=%.10g bound=%.10g", t, combination, series.value, upper)
    return PipelineReport(E, combination, series, upper, slack, holds)


def continuity_modulus(f: ScalarFunction, D: ConvexDomain, x, radii=(1e-1, 1e-2, 1e-3, 1e-4),
                       samples: int = 64, seed: int = 0) -> List[dict]:
    """Largest |f(y) - f(x)| over sampled y in D within each radius. A diagnostic, not a verdict."""
    px = as_point(x, D.dimension)
    if not D.contains(px):
        raise PreconditionError(f"{px.tolist()} lies outside the domain")
    rng = np.random.default_rng(seed)
    fx = f(px)
    out = []
    for r in radii:
        g = rng.standard_normal(size=(samples, D.dimension))
        g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
        pts = px + g * r * rng.uniform(size=(samples, 1)) ** (1.0 / D.dimension)
        oscillation = 0.0
        used = 0
        for p in pts:
            if D.contains(p, 0.0):
                used += 1
                oscillation = max(oscillation, abs(f(p) - fx))
        out.append({'radius': r, 'oscillation': oscillation, 'points': used})
    return out


def replay_gap(f: ScalarFunction, witness: dict) -> float:
    """Recompute the gap of a violation from its witness alone."""
    check = witness.get('check')
    if check in ('t-convexity', 'ts-convexity'):
        return ts_gap(f, as_point(witness['x']), as_point(witness['y']), witness['t'], witness['s'])[2]
    if check == 'jensen-discrete':
        return jensen_gap(f, distribution_from_json(witness['distribution']))[2]
    if check == 'jensen-coupled':
        return jensen_gap(f, distribution_from_json(witness['distribution']),
                          distribution_from_json(witness['outcome']))[2]
    if check == 'infinite-combination':
        sides = combination_sides(f, weights_from_json(witness['lambda']), weights_from_json(witness['mu']),
                                  sequence_from_json(witness['sequence']), int(witness['depth']))
        return sides.gap
    raise PreconditionError(f"unknown witness kind {check!r}")
