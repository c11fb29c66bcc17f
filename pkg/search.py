"""Counterexample hunting for f(sum lambda_i x_i) <= sum mu_i f(x_i) when lambda != mu."""
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from core import (ConvexDomain, EvaluationError, FiniteSupportSequence, PreconditionError, WeightSequence,
                  as_point)
from checkers import (DEFAULT_TOL, VIOLATED, check_infinite_combination, combination_depth,
                      combination_sides)
from funcparse import ScalarFunction
from series import UNBOUNDED_ERROR

logger = logging.getLogger(__name__)

SEARCH_RESTARTS = int(os.getenv('CONVEXITY_SEARCH_RESTARTS', '32'))
SEARCH_SWEEPS = int(os.getenv('CONVEXITY_SEARCH_SWEEPS', '3'))
SEARCH_WORKERS = int(os.getenv('CONVEXITY_SEARCH_WORKERS', '1'))

_REJECTED = -math.inf


def exp_condition(lambda1: float, mu1: float) -> bool:
    """(e^lambda1 - 1) / (e - 1) > mu1: f = exp with x_1 = 1 and x_i = 0 then violates the inequality."""
    for name, v in (('lambda1', lambda1), ('mu1', mu1)):
        if not 0.0 < v < 1.0:
            raise PreconditionError(f"{name}={v} outside (0,1)")
    return (math.exp(lambda1) - 1.0) / (math.e - 1.0) > mu1


def remark_gap(lambda1: float, mu1: float) -> float:
    """exp(lambda1) - 1 - mu1 (e - 1), the gap of the indicator sequence (1, 0, 0, ...) for f = exp."""
    return math.exp(lambda1) - 1.0 - mu1 * (math.e - 1.0)


@dataclass
class CounterexampleWitness:
    sequence: FiniteSupportSequence
    lhs: float
    rhs: float
    gap: float
    depth: int
    restarts_used: int
    iterations: int
    seeded_pattern: bool

    def to_dict(self) -> dict:
        return {
            'sequence': self.sequence.to_json(),
            'lhs': self.lhs,
            'rhs': self.rhs,
            'gap': self.gap,
            'depth': self.depth,
            'restarts_used': self.restarts_used,
            'iterations': self.iterations,
            'seeded_pattern': self.seeded_pattern,
        }


class _BudgetExhausted(Exception):
    pass


class _Objective:
    """Certified gap of a finite-support candidate; counts evaluations against a budget."""

    def __init__(self, f: ScalarFunction, D: ConvexDomain, W_lambda: WeightSequence, W_mu: WeightSequence,
                 fill: np.ndarray, budget: int):
        self.f, self.D = f, D
        self.W_lambda, self.W_mu = W_lambda, W_mu
        self.fill = fill
        self.budget = budget
        self.calls = 0

    def sequence(self, support: List[np.ndarray]) -> FiniteSupportSequence:
        return FiniteSupportSequence(support, self.fill)

    def __call__(self, support: List[np.ndarray]) -> float:
        if self.calls >= self.budget:
            raise _BudgetExhausted()
        self.calls += 1
        if not all(self.D.contains(p) for p in support):
            return _REJECTED
        X = self.sequence(support)
        try:
            sides = combination_sides(self.f, self.W_lambda, self.W_mu, X,
                                      combination_depth(self.W_lambda, self.W_mu, X))
        except EvaluationError as e:
            logger.debug("candidate aborted: %s", e)
            return _REJECTED
        if sides.rhs.classification == UNBOUNDED_ERROR:
            return _REJECTED
        return sides.lhs - sides.lhs_radius - sides.rhs.upper


def _seeded_patterns(D: ConvexDomain, fill: np.ndarray, support_size: int) -> List[List[np.ndarray]]:
    """Indicator-like supports built from extreme points, fill fixed at the domain witness."""
    extreme = D.extreme_points()
    patterns = []
    for e in extreme:
        if np.allclose(e, fill):
            continue
        patterns.append([e] + [fill] * (support_size - 1))
        if support_size > 1:
            patterns.append([e] * support_size)
    return patterns


def _random_direction(rng: np.random.Generator, d: int) -> np.ndarray:
    if d == 1:
        return np.array([1.0])
    g = rng.standard_normal(d)
    return g / max(float(np.linalg.norm(g)), 1e-300)


def _restart(objective: _Objective, support_size: int, sweeps: int, seed: int, index: int
             ) -> Tuple[float, List[np.ndarray]]:
    """One random start followed by coordinate ascent with bounded golden-section line searches."""
    rng = np.random.default_rng([seed, index])
    D = objective.D
    support = list(D.sample(rng, support_size))
    best = _REJECTED
    try:
        best = objective(support)
        for _ in range(sweeps):
            for i in range(support_size):
                direction = _random_direction(rng, D.dimension)
                lo, hi = D.segment_through(support[i], direction)
                if not (math.isfinite(lo) and math.isfinite(hi)) or hi - lo <= 1e-12:
                    continue
                base = support[i]

                def line(s, i=i, base=base, direction=direction):
                    trial = list(support)
                    trial[i] = base + s * direction
                    value = objective(trial)
                    return 1e300 if value == _REJECTED else -value

                res = minimize_scalar(line, bounds=(lo, hi), method='bounded', options={'xatol': 1e-10})
                candidate = list(support)
                candidate[i] = base + float(res.x) * direction
                value = objective(candidate)
                if value > best:
                    best, support = value, candidate
    except _BudgetExhausted:
        logger.debug("restart %d ran out of budget after %d evaluations", index, objective.calls)
    return best, support


def find_counterexample(f: ScalarFunction, D: ConvexDomain, W_lambda: WeightSequence, W_mu: WeightSequence,
                        support_size: int = 1, budget: int = 10_000, seed: int = 0,
                        restarts: int = SEARCH_RESTARTS, sweeps: int = SEARCH_SWEEPS,
                        workers: int = SEARCH_WORKERS, tol: float = DEFAULT_TOL,
                        progress: Optional[Callable[[int, float, int], None]] = None
                        ) -> Optional[CounterexampleWitness]:
    """Search finite-support sequences x_1..x_k (then the domain witness forever) for a certified violation.

    Seeded extreme-point patterns are tried first, then `restarts` random starts
    share what is left of the evaluation budget. Returns None when nothing
    certifiable is found; that is not a proof that the inequality holds.
    """
    if support_size < 1:
        raise PreconditionError("support size must be at least 1")
    if budget < 1:
        raise PreconditionError("budget must be at least 1")
    if f.arity != D.dimension:
        raise PreconditionError(f"f takes R^{f.arity} but the domain is R^{D.dimension}")
    D._require_bounded()
    fill = as_point(D.witness)

    seeded = _Objective(f, D, W_lambda, W_mu, fill, budget)
    try:
        for pattern in _seeded_patterns(D, fill, support_size):
            if seeded(pattern) > tol:
                witness = _certify(f, D, W_lambda, W_mu, seeded.sequence(pattern), 0, seeded.calls, True, tol)
                if witness is not None:
                    logger.info("Seeded pattern is a witness: gap %.10g", witness.gap)
                    return witness
    except _BudgetExhausted:
        logger.info("Budget spent on seeded patterns")
        return None

    remaining = budget - seeded.calls
    if remaining < 1 or restarts < 1:
        return None
    share = max(1, remaining // restarts)
    objectives = [_Objective(f, D, W_lambda, W_mu, fill, share) for _ in range(restarts)]

    results: List[Tuple[float, List[np.ndarray]]] = []
    best_index, best_value = -1, _REJECTED

    def record(r: int, outcome: Tuple[float, List[np.ndarray]]):
        nonlocal best_index, best_value
        results.append(outcome)
        logger.debug("restart %d/%d: best certified gap %.6g (%d evaluations)",
                    r + 1, restarts, outcome[0], objectives[r].calls)
        if progress:
            progress(r, outcome[0], objectives[r].calls)
        # strict comparison in index order: ties go to the lowest restart
        if outcome[0] > best_value:
            best_index, best_value = r, outcome[0]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_restart, objectives[r], support_size, sweeps, seed, r)
                       for r in range(restarts)]
            for r, fut in enumerate(futures):
                record(r, fut.result())
    else:
        for r in range(restarts):
            record(r, _restart(objectives[r], support_size, sweeps, seed, r))

    iterations = seeded.calls + sum(o.calls for o in objectives)
    if best_index < 0 or best_value <= tol:
        logger.info("No counterexample after %d evaluations", iterations)
        return None
    X = objectives[best_index].sequence(results[best_index][1])
    return _certify(f, D, W_lambda, W_mu, X, restarts, iterations, False, tol)


def _certify(f, D, W_lambda, W_mu, X: FiniteSupportSequence, restarts_used: int, iterations: int,
             seeded: bool, tol: float) -> Optional[CounterexampleWitness]:
    verdict = check_infinite_combination(f, D, W_lambda, W_mu, X, tol=tol)
    if verdict.status != VIOLATED:
        logger.warning("candidate with positive objective did not replay as violated (%s)", verdict.status)
        return None
    return CounterexampleWitness(sequence=X, lhs=verdict.witness['lhs'], rhs=verdict.witness['rhs'],
                                 gap=verdict.gap, depth=verdict.witness['depth'], restarts_used=restarts_used,
                                 iterations=iterations, seeded_pattern=seeded)
