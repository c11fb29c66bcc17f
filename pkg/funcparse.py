"""Expression parser and evaluator for scalar functions f: R^d -> R.

Grammar (lowest to highest precedence):
    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | '+' unary | power
    power := atom ('^' unary)?            # right-associative
    atom  := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Variables are x1..xd; `x` aliases x1 when d == 1. Named constants: e, pi.
"""
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, NamedTuple, Optional, Tuple

import numpy as np
from mpmath import iv

from core import EvaluationError, DimensionMismatch, PreconditionError, as_point

logger = logging.getLogger(__name__)

KNOWN_CONVEX = 'known-convex'
KNOWN_NONCONVEX = 'known-nonconvex'
UNKNOWN = 'unknown'
CONVEXITY_TAGS = (KNOWN_CONVEX, KNOWN_NONCONVEX, UNKNOWN)

LOWER_BOUND_SLACK = 1e-12

FUNCTIONS = {'exp': 1, 'log': 1, 'abs': 1, 'sqrt': 1, 'min': -2, 'max': -2}  # negative: at least |n| args
CONSTANTS = {'e': math.e, 'pi': math.pi}


class ParseError(PreconditionError):
    """Syntax error; offset is in UTF-8 bytes, position in characters."""

    def __init__(self, message: str, position: int, source: str = ''):
        offset = len(source[:position].encode('utf-8'))
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset
        self.position = position
        self.source = source


class Token(NamedTuple):
    type: str
    value: str
    offset: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<bad>\*\*)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


def tokenize(source: str) -> Iterator[Token]:
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if not m:
            raise ParseError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        if kind == 'bad':
            raise ParseError("unsupported operator '**' (use '^')", pos, source)
        if kind != 'ws':
            yield Token(kind, m.group(), pos)
        pos = m.end()
    yield Token('end', '', len(source))


# ── Expression tree ─────────────────────────────────────────────────────

class Node:
    def evaluate(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def interval(self, box):
        """Outward-rounded enclosure over a box (list of iv intervals)."""
        raise NotImplementedError

    def pretty(self) -> str:
        raise NotImplementedError


class _Unbounded(Exception):
    pass


def _checked(value: float, what: str, x) -> float:
    if not math.isfinite(value):
        raise EvaluationError(f"{what} produced a non-finite value", x)
    return value


def _ends(v) -> Tuple[float, float]:
    lo, hi = float(v.a), float(v.b)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise _Unbounded()
    return lo, hi


@dataclass(frozen=True)
class Num(Node):
    value: float

    def evaluate(self, x):
        return self.value

    def interval(self, box):
        return iv.mpf(self.value)

    def pretty(self):
        return repr(self.value)


@dataclass(frozen=True)
class Const(Node):
    name: str

    def evaluate(self, x):
        return CONSTANTS[self.name]

    def interval(self, box):
        return iv.e if self.name == 'e' else iv.pi

    def pretty(self):
        return self.name


@dataclass(frozen=True)
class Var(Node):
    index: int  # 1-based

    def evaluate(self, x):
        return float(x[self.index - 1])

    def interval(self, box):
        return box[self.index - 1]

    def pretty(self):
        return f"x{self.index}"


@dataclass(frozen=True)
class Neg(Node):
    operand: Node

    def evaluate(self, x):
        return -self.operand.evaluate(x)

    def interval(self, box):
        return -self.operand.interval(box)

    def pretty(self):
        return f"(-{self.operand.pretty()})"


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    def evaluate(self, x):
        a = self.left.evaluate(x)
        b = self.right.evaluate(x)
        if self.op == '+':
            return _checked(a + b, 'addition', x)
        if self.op == '-':
            return _checked(a - b, 'subtraction', x)
        if self.op == '*':
            return _checked(a * b, 'multiplication', x)
        if self.op == '/':
            if b == 0:
                raise EvaluationError("division by zero", x)
            return _checked(a / b, 'division', x)
        if a == 0 and b < 0:
            raise EvaluationError("zero raised to a negative power", x)
        try:
            return _checked(math.pow(a, b), 'power', x)
        except (ValueError, OverflowError) as e:
            raise EvaluationError(f"power {a}^{b}: {e}", x) from e

    def interval(self, box):
        a = self.left.interval(box)
        if self.op == '^':
            if isinstance(self.right, Num) and float(self.right.value).is_integer():
                n = int(self.right.value)
                if n < 0 and _ends(a)[0] <= 0 <= _ends(a)[1]:
                    raise _Unbounded()
                return a ** n
            b = self.right.interval(box)
            if _ends(a)[0] <= 0:
                raise _Unbounded()
            return iv.exp(b * iv.ln(a))
        b = self.right.interval(box)
        if self.op == '+':
            return a + b
        if self.op == '-':
            return a - b
        if self.op == '*':
            return a * b
        lo, hi = _ends(b)
        if lo <= 0 <= hi:
            raise _Unbounded()
        return a / b

    def pretty(self):
        return f"({self.left.pretty()} {self.op} {self.right.pretty()})"


@dataclass(frozen=True)
class Call(Node):
    name: str
    args: Tuple[Node, ...]

    def evaluate(self, x):
        vals = [a.evaluate(x) for a in self.args]
        if self.name == 'exp':
            try:
                return _checked(math.exp(vals[0]), 'exp', x)
            except OverflowError as e:
                raise EvaluationError(f"exp overflow at {vals[0]}", x) from e
        if self.name == 'log':
            if vals[0] <= 0:
                raise EvaluationError(f"log of nonpositive value {vals[0]}", x)
            return math.log(vals[0])
        if self.name == 'sqrt':
            if vals[0] < 0:
                raise EvaluationError(f"sqrt of negative value {vals[0]}", x)
            return math.sqrt(vals[0])
        if self.name == 'abs':
            return abs(vals[0])
        if self.name == 'min':
            return min(vals)
        return max(vals)

    def interval(self, box):
        vals = [a.interval(box) for a in self.args]
        if self.name == 'exp':
            return iv.exp(vals[0])
        if self.name == 'log':
            if _ends(vals[0])[0] <= 0:
                raise _Unbounded()
            return iv.ln(vals[0])
        if self.name == 'sqrt':
            if _ends(vals[0])[0] < 0:
                raise _Unbounded()
            return iv.sqrt(vals[0])
        if self.name == 'abs':
            return abs(vals[0])
        ends = [_ends(v) for v in vals]
        pick = min if self.name == 'min' else max
        return iv.mpf([pick(e[0] for e in ends), pick(e[1] for e in ends)])

    def pretty(self):
        return f"{self.name}({', '.join(a.pretty() for a in self.args)})"


# ── Parser ──────────────────────────────────────────────────────────────

class Parser:
    def __init__(self, source: str, arity: int):
        self.source = source
        self.arity = arity
        self.tokens = tokenize(source)
        self.token = next(self.tokens)

    def advance(self) -> Token:
        tok = self.token
        self.token = next(self.tokens)
        return tok

    def expect(self, value: str) -> Token:
        if self.token.value != value:
            found = self.token.value or 'end of input'
            raise ParseError(f"expected {value!r}, found {found!r}", self.token.offset, self.source)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.token.type != 'end':
            raise ParseError(f"unexpected {self.token.value!r}", self.token.offset, self.source)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.token.value in ('+', '-'):
            op = self.advance().value
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.token.value in ('*', '/'):
            op = self.advance().value
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.token.value == '-':
            self.advance()
            return Neg(self.unary())
        if self.token.value == '+':
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.token.value == '^':
            self.advance()
            return BinOp('^', base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.token
        if tok.type == 'number':
            self.advance()
            value = float(tok.value)
            if not math.isfinite(value):
                raise ParseError(f"numeric literal {tok.value} is not finite", tok.offset, self.source)
            return Num(value)
        if tok.type == 'name':
            self.advance()
            if self.token.value == '(':
                return self.call(tok)
            return self.name(tok)
        if tok.value == '(':
            self.advance()
            node = self.expr()
            self.expect(')')
            return node
        found = tok.value or 'end of input'
        raise ParseError(f"unexpected {found!r}", tok.offset, self.source)

    def call(self, tok: Token) -> Node:
        if tok.value not in FUNCTIONS:
            raise ParseError(f"unknown function {tok.value!r}", tok.offset, self.source)
        self.expect('(')
        args = [self.expr()]
        while self.token.value == ',':
            self.advance()
            args.append(self.expr())
        self.expect(')')
        want = FUNCTIONS[tok.value]
        if (want > 0 and len(args) != want) or (want < 0 and len(args) < -want):
            raise ParseError(f"{tok.value} takes {abs(want)}{'+' if want < 0 else ''} argument(s)",
                             tok.offset, self.source)
        return Call(tok.value, tuple(args))

    def name(self, tok: Token) -> Node:
        if tok.value in CONSTANTS:
            return Const(tok.value)
        if tok.value == 'x' and self.arity == 1:
            return Var(1)
        m = re.fullmatch(r'x([1-9]\d*)', tok.value)
        if m:
            k = int(m.group(1))
            if k > self.arity:
                raise ParseError(f"variable {tok.value} exceeds arity {self.arity}", tok.offset, self.source)
            return Var(k)
        raise ParseError(f"unknown identifier {tok.value!r}", tok.offset, self.source)


# ── Functions ───────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ScalarFunction:
    """An evaluable f: D -> R with optional lower bound B and convexity tag."""
    arity: int
    body: Node
    source: str = ''
    declared_lower_bound: Optional[float] = None
    convexity_tag: str = UNKNOWN
    name: str = ''
    # Lipschitz constant of f over the box [lo, hi]; builtins only.
    lipschitz: Optional[Callable[[np.ndarray, np.ndarray], float]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.convexity_tag not in CONVEXITY_TAGS:
            raise PreconditionError(f"unknown convexity tag {self.convexity_tag!r}")

    def __call__(self, x) -> float:
        p = as_point(x)
        if p.shape[0] != self.arity:
            raise DimensionMismatch(f"f takes {self.arity} variable(s), got a point in R^{p.shape[0]}")
        value = self.body.evaluate(p)
        if self.declared_lower_bound is not None and value < self.declared_lower_bound - LOWER_BOUND_SLACK:
            logger.warning("f(%s)=%r is below the declared lower bound %r", p.tolist(), value,
                           self.declared_lower_bound)
            raise EvaluationError(f"value {value!r} below declared lower bound {self.declared_lower_bound!r}", p)
        return value

    @property
    def is_builtin(self) -> bool:
        return self.lipschitz is not None

    @property
    def label(self) -> str:
        return self.name or self.source

    def pretty(self) -> str:
        return self.body.pretty()

    def bound_over_box(self, lo, hi) -> Optional[Tuple[float, float]]:
        """Interval enclosure of f over the box [lo, hi], or None when it cannot be bounded."""
        lo, hi = as_point(lo, self.arity), as_point(hi, self.arity)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            return None
        box = [iv.mpf([float(a), float(b)]) for a, b in zip(lo, hi)]
        try:
            enclosure = _ends(self.body.interval(box))
        except (_Unbounded, ZeroDivisionError, ValueError):
            logger.debug("no interval bound for %s over %s..%s", self.label, lo, hi)
            return None
        if self.declared_lower_bound is not None:
            enclosure = (max(enclosure[0], self.declared_lower_bound), enclosure[1])
        return enclosure

    def to_json(self) -> dict:
        return {'function': self.label, 'arity': self.arity, 'convexity_tag': self.convexity_tag,
                'declared_lower_bound': self.declared_lower_bound}


def parse_function(source: str, arity: int, lower_bound: Optional[float] = None,
                   convexity_tag: str = UNKNOWN) -> ScalarFunction:
    if not source or not source.strip():
        raise ParseError("empty expression", 0, source)
    if arity < 1:
        raise PreconditionError(f"arity must be positive, got {arity}")
    body = Parser(source, arity).parse()
    logger.debug("Parsed %r (arity %d) as %s", source, arity, body.pretty())
    return ScalarFunction(arity=arity, body=body, source=source,
                          declared_lower_bound=lower_bound, convexity_tag=convexity_tag)


def evaluate(f: ScalarFunction, x) -> float:
    return f(x)


# ── Builtin catalogue ───────────────────────────────────────────────────

def _coordinate_sum(arity: int) -> str:
    return 'x' if arity == 1 else ' + '.join(f'x{k}' for k in range(1, arity + 1))


def _sup_abs(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    return np.maximum(np.abs(lo), np.abs(hi))


_LINEAR_RE = re.compile(r'linear\(\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*\)')


def builtin(name: str, arity: int = 1) -> ScalarFunction:
    """Catalogue: exp, square, abs, neg-square, linear(a,b); defined for any arity.

    In R^d: exp of the coordinate sum, squared norm, l1 norm, negative squared norm, a*sum + b.
    """
    s = _coordinate_sum(arity)
    root_d = math.sqrt(arity)
    if name == 'exp':
        body, tag, bound = f"exp({s})", KNOWN_CONVEX, 0.0
        lip = lambda lo, hi: root_d * math.exp(min(float(np.sum(hi)), 700.0))
    elif name == 'square':
        body = ' + '.join(f"{v}^2" for v in (['x'] if arity == 1 else [f'x{k}' for k in range(1, arity + 1)]))
        tag, bound = KNOWN_CONVEX, 0.0
        lip = lambda lo, hi: 2.0 * float(np.linalg.norm(_sup_abs(lo, hi)))
    elif name == 'abs':
        body = ' + '.join(f"abs({v})" for v in (['x'] if arity == 1 else [f'x{k}' for k in range(1, arity + 1)]))
        tag, bound = KNOWN_CONVEX, 0.0
        lip = lambda lo, hi: root_d
    elif name == 'neg-square':
        body = '-(' + ' + '.join(f"{v}^2" for v in (['x'] if arity == 1 else [f'x{k}' for k in range(1, arity + 1)])) + ')'
        tag, bound = KNOWN_NONCONVEX, None
        lip = lambda lo, hi: 2.0 * float(np.linalg.norm(_sup_abs(lo, hi)))
    else:
        m = _LINEAR_RE.fullmatch(name.replace(' ', ''))
        if not m:
            raise PreconditionError(f"unknown builtin {name!r}")
        a, b = float(m.group(1)), float(m.group(2))
        return linear(a, b, arity)
    f = parse_function(body, arity, lower_bound=bound, convexity_tag=tag)
    return ScalarFunction(arity=arity, body=f.body, source=body, declared_lower_bound=bound,
                          convexity_tag=tag, name=name, lipschitz=lip)


def linear(a: float, b: float, arity: int = 1) -> ScalarFunction:
    """f(x) = a * (x1 + ... + xd) + b; affine, hence convex."""
    body = f"{a!r} * ({_coordinate_sum(arity)}) + {b!r}".replace("+ -", "- ")
    f = parse_function(body, arity)
    return ScalarFunction(arity=arity, body=f.body, source=body, convexity_tag=KNOWN_CONVEX,
                          declared_lower_bound=b if a == 0 else None, name=f"linear({a!r},{b!r})",
                          lipschitz=lambda lo, hi: abs(a) * math.sqrt(arity))


def resolve_function(text: str, arity: int = 1) -> ScalarFunction:
    """'builtin:<name>' or an expression over x1..xd."""
    text = text.strip()
    if text.startswith('builtin:'):
        return builtin(text[len('builtin:'):].strip(), arity)
    return parse_function(text, arity)


if __name__ == '__main__':
    for src in ('exp(x)', 'x1^2 + x2^2', 'x ** 2'):
        try:
            f = parse_function(src, 2 if 'x2' in src else 1)
            print(f"{src:15} -> {f.pretty()}")
        except ParseError as e:
            print(f"{src:15} -> {e}")
