"""
Truncated Taylor jets
Forward-mode arithmetic on multivariate Taylor polynomials, exact to a fixed order
"""

from functools import lru_cache
from itertools import combinations_with_replacement, product
from math import factorial, pi
from typing import Dict, Sequence, Tuple, Union

import numpy as np

from .errors import NonSmoothPoint

Number = Union[float, int, np.ndarray]


class JetBasis:
    """Graded monomial basis in `nvars` variables up to total degree `order`

    Monomials are ordered by degree, so the basis of a lower order is a prefix
    of the basis of a higher order in the same variables.
    """

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order

        monomials = []
        for degree in range(order + 1):
            for combo in combinations_with_replacement(range(nvars), degree):
                exponent = [0] * nvars
                for var in combo:
                    exponent[var] += 1
                monomials.append(tuple(exponent))

        self.monomials = monomials
        self.size = len(monomials)
        self.index = {m: i for i, m in enumerate(monomials)}
        self.degrees = np.array([sum(m) for m in monomials])
        self.factorials = np.array([float(np.prod([factorial(e) for e in m])) for m in monomials])
        self.prefix = {d: int(np.sum(self.degrees <= d)) for d in range(order + 1)}

        left, right, target = [], [], []
        for i, a in enumerate(monomials):
            for j, b in enumerate(monomials):
                if self.degrees[i] + self.degrees[j] <= order:
                    left.append(i)
                    right.append(j)
                    target.append(self.index[tuple(p + q for p, q in zip(a, b))])

        # Pairs grouped by target so products reduce with np.add.reduceat
        ordering = np.argsort(target, kind='stable')
        target = np.asarray(target)[ordering]
        self._left = np.asarray(left)[ordering]
        self._right = np.asarray(right)[ordering]
        self._starts = np.searchsorted(target, np.arange(self.size))

        self._derivative_maps: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
        self._restrict_masks: Dict[Tuple[int, ...], np.ndarray] = {}
        self._partial_maps: Dict[Tuple[Tuple[int, ...], ...], Tuple[np.ndarray, np.ndarray]] = {}

    def multiply(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        terms = a[..., self._left] * b[..., self._right]
        return np.add.reduceat(terms, self._starts, axis=-1)

    def derivative_map(self, var: int) -> Tuple[np.ndarray, np.ndarray]:
        if var not in self._derivative_maps:
            source = np.zeros(self.size, dtype=int)
            factor = np.zeros(self.size)
            for i, m in enumerate(self.monomials):
                if self.degrees[i] < self.order:
                    raised = list(m)
                    raised[var] += 1
                    source[i] = self.index[tuple(raised)]
                    factor[i] = m[var] + 1
            self._derivative_maps[var] = (source, factor)
        return self._derivative_maps[var]

    def restrict_mask(self, variables: Tuple[int, ...]) -> np.ndarray:
        if variables not in self._restrict_masks:
            keep = set(variables)
            self._restrict_masks[variables] = np.array(
                [all(e == 0 or v in keep for v, e in enumerate(m)) for m in self.monomials], dtype=float)
        return self._restrict_masks[variables]

    def partial_map(self, groups: Tuple[Tuple[int, ...], ...]) -> Tuple[np.ndarray, np.ndarray]:
        """Coefficient indices and factorial factors for a tensor of partials"""
        if groups not in self._partial_maps:
            shape = tuple(len(g) for g in groups)
            indices = np.zeros(shape, dtype=int)
            factors = np.zeros(shape)
            for slot in product(*[range(s) for s in shape]):
                exponent = [0] * self.nvars
                for group, k in zip(groups, slot):
                    exponent[group[k]] += 1
                idx = self.index[tuple(exponent)]
                indices[slot] = idx
                factors[slot] = self.factorials[idx]
            self._partial_maps[groups] = (indices, factors)
        return self._partial_maps[groups]


@lru_cache(maxsize=None)
def jet_basis(nvars: int, order: int) -> JetBasis:
    return JetBasis(nvars, order)


def _taylor_sqrt(a0: np.ndarray, order: int) -> list:
    coeffs = []
    binom = 1.0
    for k in range(order + 1):
        coeffs.append(binom * a0 ** (0.5 - k))
        binom *= (0.5 - k) / (k + 1)
    return coeffs


def _taylor_log(a0: np.ndarray, order: int) -> list:
    coeffs = [np.log(a0)]
    for k in range(1, order + 1):
        coeffs.append((-1.0) ** (k + 1) / (k * a0 ** k))
    return coeffs


def _taylor_exp(a0: np.ndarray, order: int) -> list:
    e = np.exp(a0)
    return [e / factorial(k) for k in range(order + 1)]


def _taylor_sin(a0: np.ndarray, order: int) -> list:
    return [np.sin(a0 + k * pi / 2) / factorial(k) for k in range(order + 1)]


def _taylor_cos(a0: np.ndarray, order: int) -> list:
    return [np.cos(a0 + k * pi / 2) / factorial(k) for k in range(order + 1)]


def _taylor_reciprocal(a0: np.ndarray, order: int) -> list:
    return [(-1.0) ** k / a0 ** (k + 1) for k in range(order + 1)]


class Jet:
    """Truncated Taylor polynomial of a scalar function, possibly batched

    `coeffs` has shape batch + (basis.size,) and stores Taylor coefficients,
    so the partial derivative for exponent alpha is alpha! * coeffs[alpha].
    `order` is the degree up to which the coefficients are valid.
    """

    # numpy operands defer to the Jet operators
    __array_ufunc__ = None

    def __init__(self, basis: JetBasis, coeffs: np.ndarray, order: int = None):
        self.basis = basis
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.order = basis.order if order is None else order

    @classmethod
    def constant(cls, basis: JetBasis, value: Number) -> 'Jet':
        value = np.asarray(value, dtype=float)
        coeffs = np.zeros(value.shape + (basis.size,))
        coeffs[..., 0] = value
        return cls(basis, coeffs)

    @classmethod
    def variable(cls, basis: JetBasis, var: int, value: Number) -> 'Jet':
        jet = cls.constant(basis, value)
        if basis.order >= 1:
            exponent = [0] * basis.nvars
            exponent[var] = 1
            jet.coeffs[..., basis.index[tuple(exponent)]] = 1.0
        return jet

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0]

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.coeffs.shape[:-1]

    def _coerce(self, other) -> 'Jet':
        if isinstance(other, Jet):
            if other.basis is not self.basis:
                raise ValueError("Jets live in different bases")
            return other
        return Jet.constant(self.basis, other)

    def __add__(self, other) -> 'Jet':
        if isinstance(other, Jet):
            other = self._coerce(other)
            return Jet(self.basis, self.coeffs + other.coeffs, min(self.order, other.order))
        coeffs = np.array(np.broadcast_to(self.coeffs, np.broadcast_shapes(
            self.shape, np.shape(other)) + (self.basis.size,)))
        coeffs[..., 0] += other
        return Jet(self.basis, coeffs, self.order)

    __radd__ = __add__

    def __neg__(self) -> 'Jet':
        return Jet(self.basis, -self.coeffs, self.order)

    def __sub__(self, other) -> 'Jet':
        return self + (-other)

    def __rsub__(self, other) -> 'Jet':
        return (-self) + other

    def __mul__(self, other) -> 'Jet':
        if isinstance(other, Jet):
            other = self._coerce(other)
            return Jet(self.basis, self.basis.multiply(self.coeffs, other.coeffs),
                       min(self.order, other.order))
        return Jet(self.basis, self.coeffs * np.asarray(other, dtype=float)[..., None], self.order)

    __rmul__ = __mul__

    def __truediv__(self, other) -> 'Jet':
        if isinstance(other, Jet):
            return self * other.reciprocal()
        other = np.asarray(other, dtype=float)
        if np.any(other == 0):
            raise NonSmoothPoint("Division by zero")
        return self * (1.0 / other)

    def __rtruediv__(self, other) -> 'Jet':
        return self.reciprocal() * other

    def __pow__(self, exponent: int) -> 'Jet':
        if int(exponent) != exponent:
            raise TypeError("Jets support integer powers only")
        exponent = int(exponent)
        if exponent < 0:
            return self.reciprocal() ** (-exponent)
        result = Jet.constant(self.basis, np.ones(self.shape))
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        result.order = self.order
        return result

    def __getitem__(self, key) -> 'Jet':
        return Jet(self.basis, self.coeffs[key], self.order)

    def _compose(self, taylor) -> 'Jet':
        """f(self) from the Taylor coefficients of f at the constant term"""
        a0 = self.value
        coeffs = taylor(a0, self.order)
        shift = self.coeffs.copy()
        shift[..., 0] = 0.0
        h = Jet(self.basis, shift, self.order)
        result = Jet.constant(self.basis, coeffs[-1])
        for c in reversed(coeffs[:-1]):
            result = result * h + c
        result.order = self.order
        return result

    def sqrt(self) -> 'Jet':
        if np.any(self.value <= 0):
            raise NonSmoothPoint("sqrt of a non-positive value")
        return self._compose(_taylor_sqrt)

    def log(self) -> 'Jet':
        if np.any(self.value <= 0):
            raise NonSmoothPoint("log of a non-positive value")
        return self._compose(_taylor_log)

    def exp(self) -> 'Jet':
        return self._compose(_taylor_exp)

    def sin(self) -> 'Jet':
        return self._compose(_taylor_sin)

    def cos(self) -> 'Jet':
        return self._compose(_taylor_cos)

    def reciprocal(self) -> 'Jet':
        if np.any(self.value == 0):
            raise NonSmoothPoint("Division by zero")
        return self._compose(_taylor_reciprocal)

    def derivative(self, var: int) -> 'Jet':
        """Jet of the partial derivative in one variable, valid to one order less"""
        if self.order < 1:
            raise ValueError("Jet has no derivative information left")
        source, factor = self.basis.derivative_map(var)
        return Jet(self.basis, self.coeffs[..., source] * factor, self.order - 1)

    def restrict(self, variables: Sequence[int]) -> 'Jet':
        """Freeze every variable outside `variables` at its expansion point"""
        mask = self.basis.restrict_mask(tuple(variables))
        return Jet(self.basis, self.coeffs * mask, self.order)

    def partials(self, groups: Sequence[Sequence[int]]) -> np.ndarray:
        """Array of partial derivatives, one axis per variable group"""
        groups = tuple(tuple(g) for g in groups)
        if len(groups) > self.order:
            raise ValueError(f"Jet valid to order {self.order}, asked for {len(groups)}")
        indices, factors = self.basis.partial_map(groups)
        return self.coeffs[..., indices] * factors

    def gradient(self, variables: Sequence[int]) -> np.ndarray:
        return self.partials((tuple(variables),))

    def sum(self, axis: int = 0) -> 'Jet':
        if axis < 0:
            axis -= 1
        return Jet(self.basis, self.coeffs.sum(axis=axis), self.order)

    def truncate(self, order: int) -> 'Jet':
        """Same jet in the smaller basis of the given order"""
        order = min(order, self.order)
        basis = jet_basis(self.basis.nvars, order)
        return Jet(basis, self.coeffs[..., :basis.size], order)

    def __repr__(self) -> str:
        return f"Jet(nvars={self.basis.nvars}, order={self.order}, shape={self.shape})"


def _checked(values, predicate, message):
    values = np.asarray(values, dtype=float)
    if np.any(predicate(values)):
        raise NonSmoothPoint(message)
    return values


def sqrt(value):
    if isinstance(value, Jet):
        return value.sqrt()
    return np.sqrt(_checked(value, lambda v: v <= 0, "sqrt of a non-positive value"))


def log(value):
    if isinstance(value, Jet):
        return value.log()
    return np.log(_checked(value, lambda v: v <= 0, "log of a non-positive value"))


def exp(value):
    return value.exp() if isinstance(value, Jet) else np.exp(value)


def sin(value):
    return value.sin() if isinstance(value, Jet) else np.sin(value)


def cos(value):
    return value.cos() if isinstance(value, Jet) else np.cos(value)


def divide(numerator, denominator):
    """Quotient that reports division by zero as a non-smooth point"""
    if isinstance(denominator, Jet):
        return numerator / denominator
    _checked(denominator, lambda v: v == 0, "Division by zero")
    return numerator / np.asarray(denominator, dtype=float)


FUNCTIONS = {
    'sqrt': sqrt,
    'sin': sin,
    'cos': cos,
    'exp': exp,
    'log': log,
}
