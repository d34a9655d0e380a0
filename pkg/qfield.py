#!/usr/bin/env python3
"""
Exact coefficient field QQ(N, n)

Every matrix entry and estimator coefficient is a rational function in the
population size N and the sample size n. Elements are sympy field elements,
kept in canonical form (gcd-free, normalised sign) by every operation, so
equality is structural. No floating point appears anywhere in this module.
"""
import logging
import re
from fractions import Fraction
from typing import Dict, Optional, Union

from sympy import Symbol, factor
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations
from sympy.polys.domains import QQ
from sympy.polys.fields import FracElement, field

from exceptions import DivergenceError, DomainError, PoleError
from partitions import Partition

logger = logging.getLogger(__name__)

FIELD, N, n = field("N,n", QQ)
RING = FIELD.ring
RatFunc = FracElement

ZERO = FIELD.zero
ONE = FIELD.one

POP_INDEX = 0
SAMPLE_INDEX = 1

_SYMBOLS = {'N': Symbol('N'), 'n': Symbol('n')}
_TRANSFORMS = standard_transformations + (convert_xor,)
_FALLING = re.compile(r'\(([^()]*)\)_(\d+)')

Number = Union[int, Fraction]


def to_fraction(coeff) -> Fraction:
    """Convert a QQ ground element to a Fraction."""
    return Fraction(int(coeff.numerator), int(coeff.denominator))


def const(value: Union[int, Fraction, RatFunc]) -> RatFunc:
    if isinstance(value, FracElement):
        return value
    if isinstance(value, Fraction):
        return FIELD(QQ(value.numerator, value.denominator))
    return FIELD(int(value))


def falling(x: RatFunc, j: int) -> RatFunc:
    """(x)_j = x(x-1)...(x-j+1)."""
    result = ONE
    for i in range(j):
        result = result * (x - i)
    return result


def e(j: int) -> RatFunc:
    """(n)_j / (N)_j"""
    if j < 0:
        raise DomainError(f"e(j) needs j >= 0, got {j}")
    return falling(n, j) / falling(N, j)


def _swap_poly(p):
    return RING.from_dict({(b, a): c for (a, b), c in p.items()})


def swap(f: RatFunc) -> RatFunc:
    """Exchange the roles of N and n."""
    return FIELD.new(_swap_poly(f.numer), _swap_poly(f.denom))


def depends_on(f: RatFunc, index: int) -> bool:
    return any(m[index] for m in f.numer.keys()) or any(m[index] for m in f.denom.keys())


def _eval_poly(p, N0: Optional[Fraction], n0: Fraction) -> Fraction:
    total = Fraction(0)
    for (a, b), c in p.items():
        term = to_fraction(c) * n0 ** b
        if a:
            term *= N0 ** a
        total += term
    return total


def render_poly(p) -> str:
    return str(p.as_expr()).replace('**', '^').replace(' ', '')


def evaluate(f: RatFunc, n0: Number, N0: Optional[Number] = None) -> Fraction:
    """Exact value of f at (n0, N0); N0 may be omitted when f is free of N."""
    n0 = Fraction(n0)
    if N0 is None:
        if depends_on(f, POP_INDEX):
            raise DomainError(f"{render(f)} depends on N but no population size was given")
    else:
        N0 = Fraction(N0)

    denominator = _eval_poly(f.denom, N0, n0)
    if denominator == 0:
        _, factors = f.denom.factor_list()
        culprit = None
        for poly, _ in factors:
            if _eval_poly(poly, N0, n0) == 0:
                culprit = render_poly(poly)
                break
        where = f"n={n0}" if N0 is None else f"n={n0}, N={N0}"
        raise PoleError(f"denominator factor {culprit} vanishes at {where}", factor=culprit)
    return _eval_poly(f.numer, N0, n0) / denominator


def _leading(p, index: int):
    degree = max(m[index] for m in p.keys())
    lead = {}
    for monom, coeff in p.items():
        if monom[index] == degree:
            reduced = list(monom)
            reduced[index] = 0
            lead[tuple(reduced)] = coeff
    return degree, RING.from_dict(lead)


def _limit(f: RatFunc, index: int, name: str) -> RatFunc:
    if not f:
        return ZERO
    top, top_lead = _leading(f.numer, index)
    bottom, bottom_lead = _leading(f.denom, index)
    if top > bottom:
        raise DivergenceError(f"{render(f)} diverges as {name} -> infinity (degree {top} over {bottom})")
    if top < bottom:
        return ZERO
    return FIELD.new(top_lead, bottom_lead)


def limit_N_inf(f: RatFunc) -> RatFunc:
    """Limit as the population size grows; a function of n alone."""
    return _limit(f, POP_INDEX, 'N')


def limit_n_inf(f: RatFunc) -> RatFunc:
    """Limit as the sample size grows; a function of N alone."""
    return _limit(f, SAMPLE_INDEX, 'n')


def _expand_falling(text: str) -> str:
    def product(match):
        inner, depth = match.group(1), int(match.group(2))
        if depth == 0:
            return '1'
        return '(' + '*'.join(f'(({inner})-{j})' for j in range(depth)) + ')'

    while _FALLING.search(text):
        text = _FALLING.sub(product, text)
    return text


def parse(text: str) -> RatFunc:
    """Read an expression such as "N*(n-1)/(n*(N-1))" or "n^2/(n-1)_3"."""
    try:
        expr = parse_expr(_expand_falling(text.strip()), local_dict=dict(_SYMBOLS),
                          transformations=_TRANSFORMS)
        return FIELD.from_expr(expr)
    except (SyntaxError, TypeError, ValueError) as e:
        raise DomainError(f"cannot read rational function {text!r}: {str(e)}")


def render(f: RatFunc) -> str:
    """Factored-where-possible ASCII form without spaces."""
    if not f:
        return '0'
    return str(factor(f.as_expr())).replace('**', '^').replace(' ', '')


class LinearCombo(dict):
    """
    Formal sum of RatFunc coefficients over partition monomials.

    A key is a Partition (a product of basis moments) or None for the
    scalar slot. Zero coefficients are never stored.
    """

    @classmethod
    def unit(cls) -> 'LinearCombo':
        return cls({None: ONE})

    @classmethod
    def monomial(cls, key: Optional[Partition], coeff=ONE) -> 'LinearCombo':
        return cls({key: const(coeff)}).clean()

    def clean(self) -> 'LinearCombo':
        for key in [k for k, v in self.items() if not v]:
            del self[key]
        return self

    def add(self, other: 'LinearCombo', scale=ONE) -> 'LinearCombo':
        scale = const(scale)
        out = LinearCombo(self)
        for key, value in other.items():
            out[key] = out.get(key, ZERO) + value * scale
        return out.clean()

    def scaled(self, scale) -> 'LinearCombo':
        scale = const(scale)
        return LinearCombo({k: v * scale for k, v in self.items()}).clean()

    def __mul__(self, other: 'LinearCombo') -> 'LinearCombo':
        out = LinearCombo()
        for ka, va in self.items():
            for kb, vb in other.items():
                if ka is None:
                    key = kb
                elif kb is None:
                    key = ka
                else:
                    key = ka.join(kb)
                out[key] = out.get(key, ZERO) + va * vb
        return out.clean()

    def order(self) -> int:
        weights = {0 if k is None else k.weight for k in self}
        return max(weights) if weights else 0

    def is_homogeneous(self) -> bool:
        return len({0 if k is None else k.weight for k in self}) <= 1

    def evaluate(self, n0: Number, N0: Optional[Number] = None) -> Dict[Optional[Partition], Fraction]:
        return {k: evaluate(v, n0, N0) for k, v in self.items()}

    def apply(self, values: Dict[Partition, Fraction], n0: Number,
              N0: Optional[Number] = None) -> Fraction:
        """Sum of coefficient(n0, N0) times the supplied basis values."""
        total = Fraction(0)
        for key, coeff in self.items():
            basis = Fraction(1) if key is None else values[key]
            total += evaluate(coeff, n0, N0) * basis
        return total

    def render(self, symbol: str = 'mu') -> str:
        if not self:
            return '0'
        ordered = sorted(self.items(), key=lambda kv: (0,) if kv[0] is None else (1,) + kv[0].sort_key())
        chunks = []
        for key, coeff in ordered:
            label = '1' if key is None else f"{symbol}({key})"
            chunks.append(f"({render(coeff)})*{label}")
        return ' + '.join(chunks)
