"""
Metric Expressions
Parses user-supplied formulas for F(x, y) and differentiates them exactly
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pyparsing import (Forward, Optional as Opt, ParseException, ParserElement, Regex,
                       StringEnd, Suppress, ZeroOrMore, col, lineno, one_of)

from . import jets
from .errors import NonSmoothPoint, MetricSyntaxError, UnknownSymbol
from .jets import Jet, jet_basis

ParserElement.enable_packrat()

logger = logging.getLogger(__name__)

MAX_JET_ORDER = 4
_VARIABLE = re.compile(r'^([xy])(\d+)$')


# Expression tree

@dataclass
class Node:
    loc: int

    def evaluate(self, xs: Sequence, ys: Sequence):
        raise NotImplementedError

    def children(self) -> List['Node']:
        return []


@dataclass
class Number(Node):
    value: float = 0.0

    def evaluate(self, xs, ys):
        return self.value

    def __str__(self) -> str:
        return repr(self.value)


@dataclass
class Variable(Node):
    name: str = ''

    @property
    def kind(self) -> str:
        return self.name[0]

    @property
    def index(self) -> int:
        return int(self.name[1:]) - 1

    def evaluate(self, xs, ys):
        return (xs if self.kind == 'x' else ys)[self.index]

    def __str__(self) -> str:
        return self.name


@dataclass
class BinaryOp(Node):
    op: str = '+'
    left: Node = None
    right: Node = None

    def evaluate(self, xs, ys):
        a = self.left.evaluate(xs, ys)
        b = self.right.evaluate(xs, ys)
        if self.op == '+':
            return a + b
        if self.op == '-':
            return a - b
        if self.op == '*':
            return a * b
        return jets.divide(a, b)

    def children(self):
        return [self.left, self.right]

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


@dataclass
class Power(Node):
    base: Node = None
    exponent: int = 1

    def evaluate(self, xs, ys):
        value = self.base.evaluate(xs, ys)
        if isinstance(value, Jet):
            return value ** self.exponent
        value = np.asarray(value, dtype=float)
        if self.exponent < 0 and np.any(value == 0):
            raise NonSmoothPoint("Division by zero in negative power")
        return value ** self.exponent

    def children(self):
        return [self.base]

    def __str__(self) -> str:
        return f"{self.base}^{self.exponent}"


@dataclass
class Call(Node):
    function: str = ''
    argument: Node = None

    def evaluate(self, xs, ys):
        return jets.FUNCTIONS[self.function](self.argument.evaluate(xs, ys))

    def children(self):
        return [self.argument]

    def __str__(self) -> str:
        return f"{self.function}({self.argument})"


@dataclass
class Negate(Node):
    operand: Node = None

    def evaluate(self, xs, ys):
        return -self.operand.evaluate(xs, ys)

    def children(self):
        return [self.operand]

    def __str__(self) -> str:
        return f"-{self.operand}"


# Grammar

def _fold(tokens, loc) -> Node:
    node = tokens[0]
    for i in range(1, len(tokens), 2):
        node = BinaryOp(loc, tokens[i], node, tokens[i + 1])
    return node


def _build_grammar():
    expr = Forward()
    lpar, rpar = Suppress('('), Suppress(')')

    number = Regex(r'(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?')
    number.set_parse_action(lambda s, loc, t: Number(loc, float(t[0])))

    name = Regex(r'[A-Za-z_][A-Za-z0-9_]*')
    call = name + lpar + expr + rpar
    call.set_parse_action(lambda s, loc, t: Call(loc, t[0], t[1]))
    ident = name.copy().set_parse_action(lambda s, loc, t: Variable(loc, t[0]))

    base = number | call | ident | (lpar + expr + rpar)
    integer = Regex(r'[+-]?\d+')
    factor = base + Opt(Suppress('^') + integer)
    factor.set_parse_action(lambda s, loc, t: Power(loc, t[0], int(t[1])) if len(t) == 2 else t[0])

    # Leading sign on a factor is accepted in addition to the documented grammar
    signed = Opt(one_of('+ -')) + factor
    signed.set_parse_action(
        lambda s, loc, t: Negate(loc, t[1]) if len(t) == 2 and t[0] == '-' else t[-1])

    term = signed + ZeroOrMore(one_of('* /') + signed)
    term.set_parse_action(lambda s, loc, t: _fold(t, loc))
    expr <<= term + ZeroOrMore(one_of('+ -') + term)
    expr.set_parse_action(lambda s, loc, t: _fold(t, loc))
    return expr + StringEnd()


_GRAMMAR = _build_grammar()


@dataclass
class MetricExpression:
    """Parsed F(x, y) over x1..xn, y1..yn"""
    source_text: str
    ast: Node
    dimension: int

    def evaluate(self, xs: Sequence, ys: Sequence):
        return self.ast.evaluate(xs, ys)

    def value(self, x: Sequence[float], y: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        xs = [x[..., i] for i in range(self.dimension)]
        ys = [y[..., i] for i in range(self.dimension)]
        result = self.evaluate(xs, ys)
        return np.broadcast_to(np.asarray(result, dtype=float),
                               np.broadcast_shapes(x.shape[:-1], y.shape[:-1]))

    def variables(self) -> List[str]:
        found, stack = set(), [self.ast]
        while stack:
            node = stack.pop()
            if isinstance(node, Variable):
                found.add(node.name)
            stack.extend(node.children())
        return sorted(found, key=_variable_sort_key)

    def __str__(self) -> str:
        return self.source_text


def _variable_sort_key(name: str) -> Tuple[int, int]:
    return (0 if name[0] == 'x' else 1, int(name[1:]))


def _validate(node: Node, source: str, n: int):
    stack = [node]
    while stack:
        current = stack.pop()
        if isinstance(current, Variable):
            match = _VARIABLE.match(current.name)
            if not match:
                raise UnknownSymbol(current.name, lineno(current.loc, source), col(current.loc, source),
                                    "identifiers are x1..xn and y1..yn")
            index = int(match.group(2))
            if index < 1 or index > n:
                raise UnknownSymbol(current.name, lineno(current.loc, source), col(current.loc, source),
                                    f"index outside 1..{n}")
        elif isinstance(current, Call) and current.function not in jets.FUNCTIONS:
            raise UnknownSymbol(current.function, lineno(current.loc, source), col(current.loc, source),
                                f"functions are {', '.join(sorted(jets.FUNCTIONS))}")
        stack.extend(current.children())


def parse_metric(source: str, n: int) -> MetricExpression:
    """Parse a metric expression in dimension n"""
    if not source or not source.strip():
        raise MetricSyntaxError("Empty metric expression", 1, 1)
    if n < 2:
        raise ValueError(f"Dimension must be at least 2, got {n}")

    try:
        ast = _GRAMMAR.parse_string(source, parse_all=True)[0]
    except ParseException as e:
        raise MetricSyntaxError(f"Malformed metric expression: {e.msg}", e.lineno, e.col) from e

    _validate(ast, source, n)
    logger.debug(f"Parsed metric expression in dimension {n}: {source}")
    return MetricExpression(source, ast, n)


# Jets

def variable_names(n: int) -> List[str]:
    return [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]


@dataclass
class JetValue:
    """Value and all partial derivatives of F at one (x, y)"""
    value: float
    partials: Dict[Tuple[str, ...], float] = field(default_factory=dict)
    order: int = 0

    def partial(self, *names: str) -> float:
        if not names:
            return self.value
        return self.partials[tuple(sorted(names, key=_variable_sort_key))]


def eval_jet(expr: MetricExpression, x: Sequence[float], y: Sequence[float], order: int,
             variables: Optional[Sequence[str]] = None) -> JetValue:
    """All partials of F up to `order` at (x, y), by forward-mode jets"""
    if not 0 <= order <= MAX_JET_ORDER:
        raise ValueError(f"Jet order must lie in 0..{MAX_JET_ORDER}, got {order}")
    n = expr.dimension
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.any(y):
        raise NonSmoothPoint("Fiber vector must be non-zero", x, y)

    basis = jet_basis(2 * n, order)
    xs = [Jet.variable(basis, i, x[i]) for i in range(n)]
    ys = [Jet.variable(basis, n + i, y[i]) for i in range(n)]
    try:
        result = expr.evaluate(xs, ys)
    except NonSmoothPoint as e:
        raise e.locate(x, y)
    if not isinstance(result, Jet):
        result = Jet.constant(basis, result)

    names = variable_names(n)
    allowed = set(range(2 * n)) if variables is None else {names.index(v) for v in variables}
    partials = {}
    for i, monomial in enumerate(basis.monomials):
        degree = basis.degrees[i]
        if degree == 0 or degree > result.order:
            continue
        if any(e and v not in allowed for v, e in enumerate(monomial)):
            continue
        key = tuple(names[v] for v, e in enumerate(monomial) for _ in range(e))
        partials[tuple(sorted(key, key=_variable_sort_key))] = float(basis.factorials[i] * result.coeffs[i])
    return JetValue(float(result.value), partials, order)


@dataclass
class HomogeneityCheck:
    passed: bool
    max_residual: float
    samples: int
    worst: Dict[str, list] = field(default_factory=dict)


def check_homogeneity(expr: MetricExpression, samples: int, tol: float, seed: int = 42,
                      lower: Optional[Sequence[float]] = None,
                      upper: Optional[Sequence[float]] = None) -> HomogeneityCheck:
    """Compare F(x, ly) with l F(x, y) at random points, directions and scales"""
    if samples < 1:
        raise ValueError("At least one sample is required")
    n = expr.dimension
    rng = np.random.default_rng(seed)
    lower = -np.ones(n) if lower is None else np.asarray(lower, dtype=float)
    upper = np.ones(n) if upper is None else np.asarray(upper, dtype=float)

    xs = rng.uniform(lower, upper, size=(samples, n))
    ys = rng.normal(size=(samples, n))
    scales = np.concatenate([[2.0, 0.5, 10.0], np.exp(rng.uniform(np.log(0.1), np.log(10.0), samples))])[:samples]

    worst_residual, worst = 0.0, {}
    for x, y, lam in zip(xs, ys, scales):
        try:
            base = float(expr.value(x, y))
            scaled = float(expr.value(x, lam * y))
        except NonSmoothPoint as e:
            raise e.locate(x, y)
        residual = abs(scaled - lam * base) / (1.0 + abs(lam * base))
        if residual >= worst_residual:
            worst_residual = residual
            worst = {'x': x.tolist(), 'y': y.tolist(), 'scale': [float(lam)]}

    return HomogeneityCheck(worst_residual <= tol, worst_residual, samples, worst)
