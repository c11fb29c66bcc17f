"""Scenario files: pydantic models for functions, domains, weights, sequences and parameters."""
import json
import logging
import math
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from checkers import DEFAULT_SAMPLES, DEFAULT_TOL
from core import (Ball, BoundedSequence, Box, ConstantSequence, ConvexDomain, DiscreteDistribution,
                  FiniteSupportSequence, GeometricWeights, HalfSpaceIntersection, Interval, PeriodicSequence,
                  PrefixWeights, PreconditionError, SampledSequence, WeightSequence, ZetaWeights)
from funcparse import ScalarFunction, parse_function, resolve_function

logger = logging.getLogger(__name__)

CONFIG_PATH = Path(__file__).parent / "config.json"

Point = Union[float, List[float]]


class _Spec(BaseModel):
    model_config = ConfigDict(extra='forbid')


# ── Weights ─────────────────────────────────────────────────────────────

class GeometricSpec(_Spec):
    kind: Literal['geometric']
    ratio: float = Field(gt=0, lt=1)

    def build(self) -> WeightSequence:
        return GeometricWeights(ratio=self.ratio)


class PrefixSpec(_Spec):
    kind: Literal['explicit-prefix']
    prefix: List[float] = Field(min_length=1)
    tail_ratio: float = Field(default=0.5, gt=0, lt=1)

    def build(self) -> WeightSequence:
        return PrefixWeights(prefix=tuple(self.prefix), tail_ratio=self.tail_ratio)


class ZetaSpec(_Spec):
    kind: Literal['zeta-like']
    exponent: float = Field(gt=1)

    def build(self) -> WeightSequence:
        return ZetaWeights(exponent=self.exponent)


WeightSpec = Annotated[Union[GeometricSpec, PrefixSpec, ZetaSpec], Field(discriminator='kind')]


# ── Domains ─────────────────────────────────────────────────────────────

class IntervalSpec(_Spec):
    shape: Literal['interval']
    a: Optional[float] = None   # None: unbounded
    b: Optional[float] = None

    def build(self) -> ConvexDomain:
        return Interval(-math.inf if self.a is None else self.a, math.inf if self.b is None else self.b)


class BoxSpec(_Spec):
    shape: Literal['box']
    lower: List[float]
    upper: List[float]

    def build(self) -> ConvexDomain:
        return Box(self.lower, self.upper)


class BallSpec(_Spec):
    shape: Literal['ball']
    center: List[float]
    radius: float = Field(ge=0)

    def build(self) -> ConvexDomain:
        return Ball(self.center, self.radius)


class HalfSpacesSpec(_Spec):
    shape: Literal['halfspaces']
    normals: List[List[float]]
    offsets: List[float]

    def build(self) -> ConvexDomain:
        return HalfSpaceIntersection(self.normals, self.offsets)


DomainSpec = Annotated[Union[IntervalSpec, BoxSpec, BallSpec, HalfSpacesSpec], Field(discriminator='shape')]


# ── Sequences and distributions ─────────────────────────────────────────

class FiniteSupportSpec(_Spec):
    generator: Literal['finite-support']
    support: List[Point]
    fill: Point
    bound: Optional[float] = None

    def build(self) -> BoundedSequence:
        return FiniteSupportSequence(self.support, self.fill, self.bound)


class PeriodicSpec(_Spec):
    generator: Literal['periodic']
    cycle: List[Point] = Field(min_length=1)
    bound: Optional[float] = None

    def build(self) -> BoundedSequence:
        return PeriodicSequence(self.cycle, self.bound)


class ConstantSpec(_Spec):
    generator: Literal['constant']
    point: Point
    bound: Optional[float] = None

    def build(self) -> BoundedSequence:
        return ConstantSequence(self.point, self.bound)


class SampledSpec(_Spec):
    generator: Literal['sampled']
    domain: DomainSpec
    seed: int = 0
    bound: Optional[float] = None

    def build(self) -> BoundedSequence:
        return SampledSequence(self.domain.build(), self.seed, self.bound)


SequenceSpec = Annotated[Union[FiniteSupportSpec, PeriodicSpec, ConstantSpec, SampledSpec],
                         Field(discriminator='generator')]


class AtomSpec(_Spec):
    point: Point
    probability: float = Field(ge=0)


class DistributionSpec(_Spec):
    atoms: List[AtomSpec] = Field(min_length=1)

    def build(self) -> DiscreteDistribution:
        return DiscreteDistribution.from_pairs((a.point, a.probability) for a in self.atoms)


# ── Scenario ────────────────────────────────────────────────────────────

class Params(_Spec):
    t: Optional[float] = None
    s: Optional[float] = None
    depth: Optional[int] = Field(default=None, ge=1)
    tol: float = Field(default=DEFAULT_TOL, ge=0)
    seed: int = 0
    budget: int = Field(default=10_000, ge=1)
    samples: int = Field(default=DEFAULT_SAMPLES, ge=1)
    denominator_bound: int = 4096
    support_size: int = Field(default=1, ge=1)
    a: Optional[float] = None
    b: Optional[float] = None
    x: Optional[Point] = None
    y: Optional[Point] = None


class Scenario(_Spec):
    """One run's inputs; mu defaults to lambda, arity to the domain dimension."""
    model_config = ConfigDict(extra='forbid', populate_by_name=True)

    function: str = 'builtin:exp'
    lower_bound: Optional[float] = None
    domain: DomainSpec = Field(default_factory=lambda: IntervalSpec(shape='interval', a=0.0, b=1.0))
    lambda_: WeightSpec = Field(default_factory=lambda: GeometricSpec(kind='geometric', ratio=0.5), alias='lambda')
    mu: Optional[WeightSpec] = None
    sequence: Optional[SequenceSpec] = None
    distribution: Optional[DistributionSpec] = None
    params: Params = Field(default_factory=Params)

    def build_domain(self) -> ConvexDomain:
        return self.domain.build()

    def build_function(self, arity: Optional[int] = None) -> ScalarFunction:
        arity = arity or self.build_domain().dimension
        f = resolve_function(self.function, arity)
        if self.lower_bound is not None and not f.is_builtin:
            f = parse_function(f.source, arity, lower_bound=self.lower_bound, convexity_tag=f.convexity_tag)
        return f

    def weights_lambda(self) -> WeightSequence:
        return self.lambda_.build()

    def weights_mu(self) -> WeightSequence:
        return (self.mu or self.lambda_).build()

    def build_sequence(self) -> BoundedSequence:
        if self.sequence is None:
            raise PreconditionError("scenario has no sequence")
        return self.sequence.build()

    def build_distribution(self) -> DiscreteDistribution:
        if self.distribution is None:
            raise PreconditionError("scenario has no distribution")
        return self.distribution.build()


def load_scenario(path: Union[str, Path]) -> Scenario:
    return Scenario.model_validate_json(Path(path).read_text(encoding='utf-8'))


def load_presets() -> dict:
    if not CONFIG_PATH.exists():
        return {}
    cfg = json.loads(CONFIG_PATH.read_text(encoding='utf-8'))
    return cfg.get("scenarios", {})


def load_preset(name: str) -> Scenario:
    presets = load_presets()
    if name not in presets:
        raise PreconditionError(f"unknown preset {name!r}; available: {', '.join(sorted(presets))}")
    logger.debug("Loaded preset %s", name)
    return Scenario.model_validate(presets[name])


def scenario_schema() -> dict:
    return Scenario.model_json_schema(by_alias=True)
