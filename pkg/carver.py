#!/usr/bin/env python3
"""
Carver functions and expectations of products of sample power sums

For a sample of size n drawn without replacement from N values,

    E S_a1 ... S_as = sum over set partitions rho of the factors of
                      lambda(shape rho) * prod over blocks s_(sum of block)

where S_a is a sample power sum, s_a the population one and lambda(pi) a
fixed combination of e_j = (n)_j/(N)_j. Everything downstream (matrices,
estimators) reduces to the integer coincidence tables built here and the
block weights of a SamplingDesign.
"""
import logging
import threading
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, prod
from typing import Dict, List, Optional, Sequence, Tuple, Union

from sympy import Expr, default_sort_key, sympify

from config import Config
from exceptions import DomainError, EngineError
from partitions import Partition, enumerate_set_partitions, partition_function
from qfield import N, ONE, ZERO, LinearCombo, RatFunc, evaluate, falling, n

logger = logging.getLogger(__name__)

ORIENTATIONS = ('N,n', 'n,N')


@dataclass(frozen=True)
class LambdaExpansion:
    """lambda(pi) = sum_j c_j e_j for j = q(pi) .. r(pi)"""

    partition: Partition
    coefficients: Tuple[int, ...]

    def __post_init__(self):
        pi = self.partition
        expected_top = (-1) ** (pi.weight - pi.parts_count) * prod(factorial(p - 1) for p in pi.parts)
        if len(self.coefficients) != pi.weight - pi.parts_count + 1:
            raise EngineError(f"lambda({pi}) needs {pi.weight - pi.parts_count + 1} coefficients")
        if self.coefficients[0] != 1 or self.coefficients[-1] != expected_top:
            raise EngineError(f"lambda({pi}) boundary coefficients {self.coefficients} are inconsistent")

    def coefficient(self, j: int) -> int:
        offset = j - self.partition.parts_count
        if 0 <= offset < len(self.coefficients):
            return self.coefficients[offset]
        return 0

    def terms(self) -> List[Tuple[int, int]]:
        q = self.partition.parts_count
        return [(q + i, c) for i, c in enumerate(self.coefficients) if c]

    def as_ratfunc(self, design: Optional['SamplingDesign'] = None) -> RatFunc:
        design = design or get_design()
        total = ZERO
        for j, c in self.terms():
            total = total + design.e(j) * c
        return total

    def render(self) -> str:
        text = ''
        for j, c in self.terms():
            magnitude = '' if abs(c) == 1 else f"{abs(c)}*"
            if not text:
                text = f"{'-' if c < 0 else ''}{magnitude}e{j}"
            else:
                text += f" {'-' if c < 0 else '+'} {magnitude}e{j}"
        return text


@lru_cache(maxsize=None)
def _block_polynomial(m: int) -> Tuple[int, ...]:
    """Moebius weights of the refinements of one block of size m, by block count."""
    coeffs = [0] * (m + 1)
    for sigma in enumerate_set_partitions(m):
        k = len(sigma)
        coeffs[k] += (-1) ** (k - 1) * factorial(k - 1)
    return tuple(coeffs)


_lambda_lock = threading.RLock()
_lambda_cache: Dict[Partition, LambdaExpansion] = {}


def carver_lambda(pi: Partition) -> LambdaExpansion:
    """Carver coefficients of pi from the set-partition Moebius enumeration."""
    if pi.weight > Config.SET_PARTITION_CAP:
        raise DomainError(f"lambda({pi}) limited to weight <= {Config.SET_PARTITION_CAP}")
    with _lambda_lock:
        cached = _lambda_cache.get(pi)
        if cached is not None:
            return cached

        poly = [1]
        for part in pi.parts:
            block = _block_polynomial(part)
            merged = [0] * (len(poly) + len(block) - 1)
            for i, a in enumerate(poly):
                if a:
                    for j, b in enumerate(block):
                        merged[i + j] += a * b
            poly = merged

        expansion = LambdaExpansion(pi, tuple(poly[pi.parts_count:pi.weight + 1]))
        _lambda_cache[pi] = expansion
        logger.debug(f" [CARVER] lambda({pi}) = {expansion.render()}")
        return expansion


class SamplingDesign:
    """
    Symbols and block weights for one sampling situation.

    orientation 'N,n' is the usual one (population size N, sample size n);
    'n,N' swaps the roles. With infinite=True the population symbol tends to
    infinity and lambda(shape) * Npop^q collapses to (nsamp)_q.
    """

    def __init__(self, orientation: str = 'N,n', infinite: bool = False):
        if orientation not in ORIENTATIONS:
            raise DomainError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
        self.orientation = orientation
        self.infinite = infinite
        self.population_symbol = N if orientation == 'N,n' else n
        self.sample_symbol = n if orientation == 'N,n' else N
        self._lock = threading.RLock()
        self._weights: Dict[Partition, RatFunc] = {}
        self._expectations: Dict[Tuple[int, ...], LinearCombo] = {}

    @property
    def population(self) -> str:
        return 'infinite' if self.infinite else 'finite'

    def __repr__(self) -> str:
        return f"SamplingDesign({self.orientation!r}, {self.population})"

    def e(self, j: int) -> RatFunc:
        return falling(self.sample_symbol, j) / falling(self.population_symbol, j)

    def lam(self, pi: Partition) -> RatFunc:
        return carver_lambda(pi).as_ratfunc(self)

    def weight(self, shape: Partition) -> RatFunc:
        """Coefficient of a coincidence pattern with the given block sizes."""
        with self._lock:
            cached = self._weights.get(shape)
            if cached is None:
                q = shape.parts_count
                if self.infinite:
                    cached = falling(self.sample_symbol, q)
                else:
                    cached = self.lam(shape) * self.population_symbol ** q
                self._weights[shape] = cached
            return cached

    def inverse_sample_power(self, k: int) -> RatFunc:
        return ONE / self.sample_symbol ** k

    def statistic_expectation(self, factors: Sequence[int]) -> LinearCombo:
        """
        E prod Y_i for a population with mean zero, as a combination of
        population central-moment products.

        A factor 1 stands for the sample mean, a factor a >= 2 for the sample
        central moment hat mu_a.
        """
        key = tuple(sorted(factors))
        with self._lock:
            cached = self._expectations.get(key)
            if cached is not None:
                return cached

        if not key:
            result = LinearCombo.unit()
        else:
            polynomial = Counter({(): 1})
            for factor in key:
                polynomial = _multiply(polynomial, _statistic_polynomial(factor))
            collected: Dict[Partition, Dict[Tuple[Partition, int], int]] = defaultdict(lambda: defaultdict(int))
            for monomial, coeff in polynomial.items():
                if not coeff:
                    continue
                for sums, shapes in coincidence_table(monomial, True).items():
                    for shape, count in shapes.items():
                        collected[sums][(shape, len(monomial))] += coeff * count
            result = LinearCombo()
            for sums, by_shape in collected.items():
                total = ZERO
                for (shape, depth), count in by_shape.items():
                    if count:
                        total = total + self.weight(shape) * self.inverse_sample_power(depth) * count
                result[sums] = total
            result.clean()

        with self._lock:
            self._expectations[key] = result
        return result


_design_lock = threading.RLock()
_designs: Dict[Tuple[str, bool], SamplingDesign] = {}


def get_design(orientation: str = 'N,n', infinite: bool = False) -> SamplingDesign:
    """Get the shared design instance for an orientation and population kind"""
    with _design_lock:
        key = (orientation, infinite)
        if key not in _designs:
            _designs[key] = SamplingDesign(orientation, infinite)
        return _designs[key]


@lru_cache(maxsize=None)
def _statistic_polynomial_cached(a: int) -> Tuple[Tuple[Tuple[int, ...], int], ...]:
    if a == 1:
        return (((1,), 1),)
    terms: Counter = Counter()
    for j in range(a + 1):
        monomial = ((j,) if j >= 1 else ()) + (1,) * (a - j)
        terms[tuple(sorted(monomial))] += comb(a, j) * (-1) ** (a - j)
    return tuple((m, c) for m, c in terms.items() if c)


def _statistic_polynomial(a: int) -> Counter:
    """Sample statistic as a polynomial in power sums, each S_k carrying 1/n."""
    return Counter(dict(_statistic_polynomial_cached(a)))


def _multiply(left: Counter, right: Counter) -> Counter:
    out: Counter = Counter()
    for ma, ca in left.items():
        for mb, cb in right.items():
            out[tuple(sorted(ma + mb))] += ca * cb
    return out


@lru_cache(maxsize=None)
def _coincidence_table_cached(exponents: Tuple[int, ...], drop_unit_sums: bool):
    table: Dict[Partition, Counter] = defaultdict(Counter)
    for sigma in enumerate_set_partitions(len(exponents)):
        sums = tuple(sum(exponents[i - 1] for i in block) for block in sigma.blocks)
        if drop_unit_sums and 1 in sums:
            continue
        table[Partition(sums)][sigma.shape()] += 1
    return {k: dict(v) for k, v in table.items()}


def coincidence_table(exponents: Sequence[int], drop_unit_sums: bool = False) -> Dict[Partition, Dict[Partition, int]]:
    """
    Block-sum partition -> {shape: count} over all set partitions of the
    factors. With drop_unit_sums, patterns leaving a lone first power are
    skipped (they vanish when the population mean is zero).
    """
    return _coincidence_table_cached(tuple(sorted(exponents)), drop_unit_sums)


Exponent = Union[int, str, Expr]


@dataclass(frozen=True)
class ExpansionTerm:
    shape: Partition
    sums: Tuple[Expr, ...]
    multiplicity: int


@dataclass
class PowerSumExpansion:
    """E S_a1...S_as as lambda-weighted population power-sum products"""

    exponents: Tuple[Expr, ...]
    terms: List[ExpansionTerm]

    def shapes(self) -> List[Partition]:
        seen: List[Partition] = []
        for term in self.terms:
            if term.shape not in seen:
                seen.append(term.shape)
        return seen

    def multiplicity_by_shape(self) -> Dict[Partition, int]:
        counts: Dict[Partition, int] = defaultdict(int)
        for term in self.terms:
            counts[term.shape] += term.multiplicity
        return dict(counts)

    def evaluate(self, population: Sequence, n0: int) -> Fraction:
        """Numeric value for integer exponents on a concrete population."""
        values = [Fraction(x) for x in population]
        N0 = len(values)
        total = Fraction(0)
        for term in self.terms:
            product = Fraction(1)
            for s in term.sums:
                if not s.is_Integer:
                    raise DomainError("numeric evaluation needs integer exponents")
                product *= sum(x ** int(s) for x in values)
            lam = evaluate(carver_lambda(term.shape).as_ratfunc(), n0, N0)
            total += term.multiplicity * lam * product
        return total

    def render(self) -> str:
        chunks = []
        for shape in self.shapes():
            inner = []
            for term in (t for t in self.terms if t.shape == shape):
                powers = Counter(_render_sum(s) for s in term.sums)
                product = ''.join(f"s[{k}]" + (f"^{v}" if v > 1 else '') for k, v in powers.items())
                inner.append(product if term.multiplicity == 1 else f"{term.multiplicity} {product}")
            body = inner[0] if len(inner) == 1 else '( ' + ' + '.join(inner) + ' )'
            chunks.append(f"λ({shape})·{body}")
        return ' + '.join(chunks)


def _render_sum(expr: Expr) -> str:
    return str(expr).replace(' ', '').replace('*', '')


def expand_power_product(exponents: Sequence[Exponent]) -> PowerSumExpansion:
    """Expand E S_a1 ... S_as; repeated exponents merge their groupings."""
    s = len(exponents)
    if s < 1 or s > Config.EXPANSION_CAP:
        raise DomainError(f"expansions limited to 1..{Config.EXPANSION_CAP} factors, got {s}")
    symbols = tuple(sympify(a) for a in exponents)

    counts: Dict[Tuple[Partition, Tuple[Expr, ...]], int] = defaultdict(int)
    for sigma in enumerate_set_partitions(s):
        sums = tuple(sorted((sum((symbols[i - 1] for i in block), sympify(0)) for block in sigma.blocks),
                            key=default_sort_key))
        counts[(sigma.shape(), sums)] += 1

    terms = [ExpansionTerm(shape, sums, count) for (shape, sums), count in counts.items()]
    terms.sort(key=lambda t: (t.shape.sort_key(), [default_sort_key(x) for x in t.sums]))
    return PowerSumExpansion(symbols, terms)


def central_power_expectation(exponents: Sequence[int],
                              design: Optional[SamplingDesign] = None) -> LinearCombo:
    """
    E prod mu*_a with mu*_a = n^-1 sum (X_i - mu)^a, over population central
    moment products; mu_1 = 0 removes every pattern with a lone first power.
    """
    design = design or get_design()
    exponents = tuple(int(a) for a in exponents)
    if not exponents or len(exponents) > Config.EXPANSION_CAP:
        raise DomainError(f"expansions limited to 1..{Config.EXPANSION_CAP} factors")
    result = LinearCombo()
    scale = design.inverse_sample_power(len(exponents))
    for sums, shapes in coincidence_table(exponents, True).items():
        total = ZERO
        for shape, count in shapes.items():
            total = total + design.weight(shape) * count
        result[sums] = total * scale
    return result.clean()


def lambda_symbol(pi: Partition) -> RatFunc:
    return get_design().lam(pi)


def full_census_value(pi: Partition) -> int:
    """lambda(pi) with every e_j set to one."""
    return sum(carver_lambda(pi).coefficients)


def power_sum_coefficient(pi: Partition) -> RatFunc:
    """lambda(pi) P(pi), the weight of pi in E S_1^r."""
    return lambda_symbol(pi) * partition_function(pi)
