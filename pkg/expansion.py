"""Greedy rational expansions t = sum_i lambda_i q_i with q_i rational in [0, 1]."""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple

import numpy as np

from core import (ConvexityError, DimensionMismatch, FiniteSupportSequence, PreconditionError,
                  WeightSequence, as_point)

logger = logging.getLogger(__name__)

# Tolerance, in remainder units, on both ends of every feasibility window.
WINDOW_SLACK = Fraction(1, 10 ** 13)


class InfeasibleExpansion(ConvexityError):
    """No rational with an admissible denominator fits the feasibility window at some step."""

    def __init__(self, message: str, step: int, window: Tuple[float, float]):
        super().__init__(message)
        self.step = step
        self.window = window


@dataclass(frozen=True)
class RationalExpansion:
    target: float
    digits: Tuple[Fraction, ...]
    remainders: Tuple[float, ...]   # r_1 .. r_{N+1}; r_n is the remainder before step n
    windows: Tuple[Tuple[float, float], ...]
    depth: int

    def reconstruction(self, W: WeightSequence) -> float:
        return math.fsum(W.weight_at(n) * float(q) for n, q in enumerate(self.digits, 1))

    def to_json(self) -> dict:
        return {
            'target': self.target,
            'digits': [f"{q.numerator}/{q.denominator}" for q in self.digits],
            'remainders': list(self.remainders),
            'depth': self.depth,
        }


def simplest_rational(lo, hi) -> Fraction:
    """The rational of smallest denominator in [lo, hi] (Stern-Brocot descent on continued fractions)."""
    lo, hi = Fraction(lo), Fraction(hi)
    if lo > hi:
        raise PreconditionError(f"empty interval [{lo}, {hi}]")
    fl = math.floor(lo)
    if fl == lo:
        return Fraction(fl)
    if fl + 1 <= hi:
        return Fraction(fl + 1)
    return fl + 1 / simplest_rational(1 / (hi - fl), 1 / (lo - fl))


def _nearest_to_midpoint(lo: Fraction, hi: Fraction, denominator: int) -> Fraction:
    """Among p/denominator in [lo, hi], the one closest to the midpoint (smaller p on ties)."""
    p_min, p_max = math.ceil(lo * denominator), math.floor(hi * denominator)
    mid = (lo + hi) / 2 * denominator
    p = math.floor(mid)
    if mid - p > Fraction(1, 2):
        p += 1
    return Fraction(min(max(p, p_min), p_max), denominator)


def _select_digit(lo: Fraction, hi: Fraction, denominator_bound: int, step: int) -> Fraction:
    simplest = simplest_rational(lo, hi)
    if simplest.denominator > denominator_bound:
        raise InfeasibleExpansion(
            f"step {step}: no rational with denominator <= {denominator_bound} in "
            f"[{float(lo):.6g}, {float(hi):.6g}]; increase the denominator bound",
            step, (float(lo), float(hi)))
    return _nearest_to_midpoint(lo, hi, simplest.denominator)


def lambda_expand(W: WeightSequence, t: float, N: int, denominator_bound: int = 1024) -> RationalExpansion:
    """Greedy expansion of t with digits chosen inside each step's feasibility window.

    At step n with remainder r the admissible digits form
    [max(0, (r - rest_n) / lambda_n), min(1, r / lambda_n)], where rest_n is
    1 minus the first n weights, summed exactly from the same float weights
    that are subtracted. Both ends are widened by WINDOW_SLACK in remainder
    units, so remainders stay within WINDOW_SLACK of [0, rest_n].
    """
    if not 0.0 <= t <= 1.0:
        raise PreconditionError(f"t outside [0,1]: {t}")
    if denominator_bound < 2:
        raise PreconditionError(f"denominator bound must be at least 2, got {denominator_bound}")
    if N < 1:
        raise PreconditionError(f"expansion depth must be positive, got {N}")
    W._check_index(N + 1)

    r = Fraction(t)
    rest = Fraction(1)
    digits: List[Fraction] = []
    remainders: List[float] = [float(r)]
    windows: List[Tuple[float, float]] = []
    for n in range(1, N + 1):
        lam = Fraction(W.weight_at(n))
        rest -= lam
        lo = max(Fraction(0), (r - rest - WINDOW_SLACK) / lam)
        hi = min(Fraction(1), (r + WINDOW_SLACK) / lam)
        if lo > hi:
            raise InfeasibleExpansion(f"step {n}: feasibility window [{float(lo):.6g}, {float(hi):.6g}] is empty",
                                      n, (float(lo), float(hi)))
        windows.append((float(lo), float(hi)))
        q = _select_digit(lo, hi, denominator_bound, n)
        digits.append(q)
        r = r - lam * q
        remainders.append(float(r))
        logger.debug("step %d: window [%.6g, %.6g] digit %s remainder %.3g", n, lo, hi, q, r)

    logger.info("Expanded t=%r to depth %d (max denominator %d)", t, N, max(q.denominator for q in digits))
    return RationalExpansion(target=float(t), digits=tuple(digits), remainders=tuple(remainders),
                             windows=tuple(windows), depth=N)


def replay(E: RationalExpansion, W: WeightSequence) -> List[float]:
    """Recompute r_1..r_{N+1} from the digits with exact rational arithmetic."""
    r = Fraction(E.target)
    out = [float(r)]
    for n, q in enumerate(E.digits, 1):
        r -= Fraction(W.weight_at(n)) * q
        out.append(float(r))
    return out


def complement_identity_check(E: RationalExpansion, W: WeightSequence) -> bool:
    """1 - t == sum lambda_i (1 - q_i), up to the truncated tail mass."""
    complement = math.fsum(W.weight_at(n) * float(1 - q) for n, q in enumerate(E.digits, 1))
    slack = W.tail_mass(E.depth + 1) + 1e-12
    return abs((1.0 - E.target) - complement) <= slack


def combination_pushforward(E: RationalExpansion, x, y) -> FiniteSupportSequence:
    """z_i = q_i x + (1 - q_i) y for i <= N, then y forever."""
    px, py = as_point(x), as_point(y)
    if px.shape != py.shape:
        raise DimensionMismatch(f"x in R^{px.shape[0]} but y in R^{py.shape[0]}")
    support = [float(q) * px + (1.0 - float(q)) * py for q in E.digits]
    bound = max(float(np.linalg.norm(px)), float(np.linalg.norm(py)))
    return FiniteSupportSequence(support, py, bound=bound)
