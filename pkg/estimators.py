#!/usr/bin/env python3
"""
Unbiased estimators for moment and cumulant products

A target is expanded over the central basis mu(pi) (unit parts are the
mean); with C the central sampling matrix, the row D* = D C^-1 applied to
the sample central moments is unbiased for the target. Pure noncentral
targets go through B^-1 on the sample noncentral moments instead.
"""
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial, prod
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from more_itertools import powerset

from carver import SamplingDesign, get_design
from config import Config
from exceptions import DomainError, PoleError
from matrices import build_B, cumulant_in_central, get_inverse, noncentral_in_central
from partitions import Partition, enumerate_partitions, enumerate_set_partitions, partition_function, stirling1, stirling2
from qfield import ONE, ZERO, LinearCombo, N, RatFunc, const, evaluate, limit_N_inf, render

logger = logging.getLogger(__name__)

KINDS = ('m', 'mu', 'k', 'jmu', 'jk')
_FACTOR = re.compile(r'^(m|mu|k|jmu|jk)\((.*)\)$')
# E[(mean-mu)^k] is jmu(1^k). A mu(...) factor is always a population
# moment product with unit parts standing for the mean, so mu(1^2)*mu(1^3)
# is mu(1^5); the composite of centred sample statistics is jmu(1^2)*jmu(1^3).
_ALIAS = re.compile(r'^E\[\(mean-mu\)\^(\d+)\]$')

Value = Union[int, float, str, Fraction]


def to_exact(value: Value) -> Fraction:
    """Promote a data value to a Fraction; floats keep their binary expansion."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        return Fraction(text) if '/' in text or not _looks_float(text) else Fraction(float(text))
    return Fraction(int(value))


def _looks_float(text: str) -> bool:
    return any(c in text for c in '.eE')


@dataclass(frozen=True)
class Dataset:
    """
    Observed values. A sample carries the population size it was drawn
    from (None for an infinite population); a population carries none.
    """

    values: Tuple[Fraction, ...]
    role: str = 'sample'
    population_size: Optional[int] = None

    def __post_init__(self):
        values = tuple(to_exact(v) for v in self.values)
        if not values:
            raise DomainError("a dataset needs at least one value")
        if self.role not in ('sample', 'population'):
            raise DomainError(f"dataset role must be 'sample' or 'population', got {self.role!r}")
        if self.role == 'sample' and self.population_size is not None and self.population_size < len(values):
            raise DomainError(f"sample of size {len(values)} cannot come from a population of {self.population_size}")
        object.__setattr__(self, 'values', values)

    @classmethod
    def sample(cls, values: Iterable[Value], population_size: Optional[int] = None) -> 'Dataset':
        return cls(tuple(values), 'sample', population_size)

    @classmethod
    def population(cls, values: Iterable[Value]) -> 'Dataset':
        return cls(tuple(values), 'population')

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def infinite(self) -> bool:
        return self.role == 'sample' and self.population_size is None


def mean(values: Sequence[Fraction]) -> Fraction:
    return sum(values, Fraction(0)) / len(values)


def single_moments(values: Sequence[Fraction], upto: int) -> Tuple[Dict[int, Fraction], Dict[int, Fraction]]:
    """m_k and mu_k for k = 1..upto, with mu_1 the mean"""
    size = len(values)
    centre = mean(values)
    raw = {k: sum((x ** k for x in values), Fraction(0)) / size for k in range(1, upto + 1)}
    central = {1: centre}
    for k in range(2, upto + 1):
        central[k] = sum(((x - centre) ** k for x in values), Fraction(0)) / size
    return raw, central


def product_value(pi: Optional[Partition], singles: Dict[int, Fraction]) -> Fraction:
    value = Fraction(1)
    if pi is not None:
        for part in pi.parts:
            value *= singles[part]
    return value


def sample_moments(d: Union[Dataset, Sequence[Value]], r: int) -> Tuple[Dict[Partition, Fraction], Dict[Partition, Fraction]]:
    """Products m-hat(pi) and mu-hat(pi) for every partition of r."""
    values = d.values if isinstance(d, Dataset) else tuple(to_exact(v) for v in d)
    raw, central = single_moments(values, r)
    order = enumerate_partitions(r)
    return ({pi: product_value(pi, raw) for pi in order},
            {pi: product_value(pi, central) for pi in order})


@lru_cache(maxsize=None)
def joint_central_moment(parts: Tuple[int, ...], orientation: str = 'N,n', infinite: bool = False) -> LinearCombo:
    """
    E prod (Y_i - E Y_i) over the central basis, where Y is the sample mean
    for a part 1 and mu-hat_a for a part a.
    """
    design = get_design(orientation, infinite)
    singles = [design.statistic_expectation((p,)) for p in parts]
    indices = range(len(parts))
    total = LinearCombo()
    for chosen in powerset(indices):
        term = design.statistic_expectation(tuple(parts[i] for i in chosen))
        for i in indices:
            if i not in chosen:
                term = term * singles[i]
        sign = -1 if (len(parts) - len(chosen)) % 2 else 1
        total = total.add(term, sign)
    return total


@lru_cache(maxsize=None)
def joint_cumulant(parts: Tuple[int, ...], orientation: str = 'N,n', infinite: bool = False) -> LinearCombo:
    """Joint cumulant of the same statistics from their centred joint moments."""
    if len(parts) == 1:
        return joint_central_moment(parts, orientation, infinite)
    total = LinearCombo()
    for sigma in enumerate_set_partitions(len(parts)):
        if any(len(block) == 1 for block in sigma.blocks):
            continue
        b = len(sigma)
        term = LinearCombo.unit()
        for block in sigma.blocks:
            term = term * joint_central_moment(tuple(parts[i - 1] for i in block), orientation, infinite)
        total = total.add(term, (-1) ** (b - 1) * factorial(b - 1))
    return total


def _product(factor, parts: Sequence[int]) -> LinearCombo:
    combo = LinearCombo.unit()
    for part in parts:
        combo = combo * factor(part)
    return combo


@dataclass(frozen=True)
class TargetFactor:
    kind: str
    partition: Partition

    def __str__(self) -> str:
        return f"{self.kind}({self.partition})"

    def expansion(self, design: SamplingDesign) -> LinearCombo:
        parts = self.partition.parts
        if self.kind == 'm':
            return _product(noncentral_in_central, parts)
        if self.kind == 'mu':
            return LinearCombo.monomial(self.partition)
        if self.kind == 'k':
            return _product(cumulant_in_central, parts)
        if self.kind == 'jmu':
            return joint_central_moment(parts, design.orientation, design.infinite)
        return joint_cumulant(parts, design.orientation, design.infinite)


@dataclass(frozen=True)
class Target:
    """Product of moment, cumulant or joint-statistic factors"""

    text: str
    factors: Tuple[TargetFactor, ...] = field(default=())

    @classmethod
    def parse(cls, text: str) -> 'Target':
        cleaned = text.strip().replace(' *', '*').replace('* ', '*')
        if not cleaned:
            raise DomainError("empty target")
        alias = _ALIAS.match(cleaned.replace(' ', ''))
        if alias:
            k = int(alias.group(1))
            return cls(cleaned, (TargetFactor('jmu', Partition((1,) * k)),))

        factors = []
        for chunk in cleaned.split('*'):
            match = _FACTOR.match(chunk.strip())
            if not match:
                raise DomainError(f"cannot read target factor {chunk!r}; expected one of "
                                  f"{', '.join(k + '(...)' for k in KINDS)}")
            factors.append(TargetFactor(match.group(1), Partition.parse(match.group(2))))

        target = cls(cleaned, tuple(factors))
        if target.order > Config.MAX_ORDER:
            raise DomainError(f"target {cleaned} has order {target.order} above {Config.MAX_ORDER}")
        return target

    def __str__(self) -> str:
        return '*'.join(str(f) for f in self.factors)

    @property
    def order(self) -> int:
        return sum(f.partition.weight for f in self.factors)

    @property
    def kinds(self) -> set:
        return {f.kind for f in self.factors}

    @property
    def is_noncentral(self) -> bool:
        return self.kinds == {'m'}

    @property
    def depends_on_design(self) -> bool:
        return bool(self.kinds & {'jmu', 'jk'})

    def noncentral_partition(self) -> Partition:
        return Partition(tuple(p for f in self.factors for p in f.partition.parts))

    def expansion(self, design: Optional[SamplingDesign] = None) -> LinearCombo:
        """Population coefficients over the central basis"""
        design = design or get_design()
        combo = LinearCombo.unit()
        for f in self.factors:
            combo = combo * f.expansion(design)
        return combo


def as_target(target: Union[str, Target]) -> Target:
    return target if isinstance(target, Target) else Target.parse(target)


@dataclass
class DStarVector:
    """Estimator coefficients on a sample basis (central or noncentral)"""

    target: Target
    entries: LinearCombo
    basis: str = 'central'
    population: str = 'finite'

    @property
    def symbol(self) -> str:
        return 'mhat' if self.basis == 'noncentral' else 'muhat'

    def coefficient(self, pi: Partition) -> RatFunc:
        return self.entries.get(pi, ZERO)

    def render(self) -> str:
        return self.entries.render(self.symbol)

    def to_records(self) -> List[Dict[str, str]]:
        ordered = sorted(self.entries.items(), key=lambda kv: kv[0].sort_key())
        return [{'col': str(k), 'value': render(v)} for k, v in ordered]

    def evaluate(self, n0, N0=None) -> Dict[Partition, Fraction]:
        """Coefficients at a concrete (n, N); poles name the minimal usable n."""
        try:
            return self.entries.evaluate(n0, N0)
        except PoleError as e:
            minimal = minimal_sample_size(self.entries, N0)
            raise PoleError(f"estimator for {self.target} has a pole at n={n0}: {str(e)}; "
                            f"needs n >= {minimal}", factor=e.factor, minimal_n=minimal)

    def apply(self, d: Dataset) -> Fraction:
        r = max((k.weight for k in self.entries), default=1)
        raw, central = sample_moments(d, r)
        values = raw if self.basis == 'noncentral' else central
        coefficients = self.evaluate(d.size, d.population_size)
        return sum((c * values[k] for k, c in coefficients.items()), Fraction(0))


def minimal_sample_size(entries: LinearCombo, N0=None) -> Optional[int]:
    """Smallest n from which every coefficient is finite up to n + order."""
    r = max((k.weight for k in entries if k is not None), default=1)
    ceiling = N0 if N0 is not None else Config.MAX_ORDER * 8 + r
    for start in range(1, ceiling + 1):
        window = range(start, min(start + r, ceiling) + 1)
        try:
            for n0 in window:
                entries.evaluate(n0, N0)
        except PoleError:
            continue
        return start
    return None


def _design(infinite: bool, orientation: str = 'N,n') -> SamplingDesign:
    return get_design(orientation, infinite)


def dstar(target: Union[str, Target], infinite: bool = False, orientation: str = 'N,n') -> DStarVector:
    """Estimator row D* for a target, built once per (target, population, orientation)."""
    return _dstar(as_target(target), infinite, orientation)


@lru_cache(maxsize=None)
def _dstar(target: Target, infinite: bool, orientation: str) -> DStarVector:
    design = _design(infinite, orientation)
    r = target.order

    if target.is_noncentral:
        inverse = get_inverse('B', r, orientation, infinite)
        row = inverse.row_combo(target.noncentral_partition())
        return DStarVector(target, row, 'noncentral', design.population)

    expansion = target.expansion(design)
    if None in expansion:
        raise DomainError(f"target {target} is not homogeneous of order {r}")
    inverse = get_inverse('C', r, orientation, infinite)
    entries = LinearCombo()
    for key, coeff in expansion.items():
        entries = entries.add(inverse.row_combo(key), coeff)
    logger.debug(f" [ESTIMATE] D* for {target} ({design.population}): {len(entries)} terms")
    return DStarVector(target, entries, 'central', design.population)


def ue(target: Union[str, Target], d: Dataset) -> Fraction:
    """Unbiased estimate of the target from a sample."""
    target = as_target(target)
    if d.role != 'sample':
        raise DomainError("unbiased estimation needs a sample dataset")
    vector = dstar(target, infinite=d.infinite)
    estimate = vector.apply(d)
    logger.info(f" [ESTIMATE] {target} on n={d.size}, N={d.population_size or 'inf'}: {estimate}")
    return estimate


def population_value(target: Union[str, Target], population: Union[Dataset, Sequence[Value]],
                     n0: Optional[int] = None, infinite: bool = False) -> Fraction:
    """
    Value of the target on a population. Joint-statistic targets need the
    sample size n0 their definition refers to; with infinite=True they are
    taken under independent draws from the population's values.
    """
    target = as_target(target)
    values = population.values if isinstance(population, Dataset) else tuple(to_exact(v) for v in population)
    expansion = target.expansion(get_design(infinite=infinite))
    if target.depends_on_design and n0 is None:
        raise DomainError(f"{target} refers to a sample size; pass n0")
    _, central = single_moments(values, target.order)
    singles_for = {k: product_value(k, central) for k in expansion if k is not None}
    return expansion.apply(singles_for, n0 if n0 is not None else 1, None if infinite else len(values))


@dataclass
class PolykayVector:
    """Constant coefficients of kappa(pi) over mu and the estimator row"""

    partition: Partition
    label: str
    constants: LinearCombo
    row: DStarVector

    def constant_list(self) -> List[int]:
        ordered = sorted(self.constants.items(), key=lambda kv: kv[0].sort_key())
        return [int(evaluate(v, 1, 1)) for _, v in ordered]


def polykay(parts: Union[str, Partition], infinite: bool = False) -> PolykayVector:
    """a(pi) for a finite population, b(pi) for an infinite one, and the UE row"""
    pi = parts if isinstance(parts, Partition) else Partition.parse(parts)
    target = Target(f"k({pi})", (TargetFactor('k', pi),))
    constants = _product(cumulant_in_central, pi.parts)
    return PolykayVector(pi, 'b' if infinite else 'a', constants, dstar(target, infinite))


def cumulant_product_ue(target: Union[str, Target], d: Dataset) -> Fraction:
    """Unbiased estimate of a cumulant product or joint cumulant target."""
    target = as_target(target)
    if not target.kinds <= {'k', 'jk'}:
        raise DomainError(f"{target} is not a cumulant target")
    return ue(target, d)


def bernoulli_coeffs(r: int, orientation: str = 'N,n') -> List[List[RatFunc]]:
    """
    Lower triangular a with a[s-1][i-1] = sum{lambda(pi) P(pi) : pi of s, q(pi) = i},
    so that E (n p-hat)^s = sum_i a_{s,i} (N p)^i.
    """
    design = get_design(orientation)
    table = [[ZERO] * r for _ in range(r)]
    for s in range(1, r + 1):
        for pi in enumerate_partitions(s):
            i = pi.parts_count
            table[s - 1][i - 1] = table[s - 1][i - 1] + design.lam(pi) * partition_function(pi)
    return table


def c_vector(r: int) -> List[RatFunc]:
    """Last row of the Bernoulli table without its diagonal entry lambda(1^r)."""
    return bernoulli_coeffs(r)[r - 1][:r - 1]


def bernoulli_ue_coefficients(r: int, infinite: bool = False) -> List[RatFunc]:
    """Coefficients b_i with sum_i b_i (n p-hat)^i unbiased for p^r"""
    swapped = bernoulli_coeffs(r, 'n,N')[r - 1]
    scale = ONE / N ** r
    coefficients = [value * scale for value in swapped]
    if infinite:
        coefficients = [limit_N_inf(value) for value in coefficients]
    return coefficients


def bernoulli_ue(r: int, d: Dataset) -> Fraction:
    """Unbiased estimate of p^r from 0/1 data."""
    if any(v not in (0, 1) for v in d.values):
        raise DomainError("Bernoulli estimation needs 0/1 data")
    count = sum(d.values, Fraction(0))
    coefficients = bernoulli_ue_coefficients(r, infinite=d.infinite)
    total = Fraction(0)
    for i, coeff in enumerate(coefficients, start=1):
        if coeff:
            total += evaluate(coeff, d.size, d.population_size) * count ** i
    return total


def _poisson_expectation(key: Partition) -> Dict[int, RatFunc]:
    """E m-hat(key) at N = inf under a Poisson law, as a polynomial in lambda."""
    row = build_B(key.weight, infinite=True).row(key)
    polynomial: Dict[int, RatFunc] = {}
    for col, coeff in row.items():
        moment = {0: ONE}
        for part in col.parts:
            single = {k: const(stirling2(part, k)) for k in range(1, part + 1)}
            merged: Dict[int, RatFunc] = {}
            for a, x in moment.items():
                for b, y in single.items():
                    merged[a + b] = merged.get(a + b, ZERO) + x * y
            moment = merged
        for degree, value in moment.items():
            polynomial[degree] = polynomial.get(degree, ZERO) + value * coeff
    return {k: v for k, v in polynomial.items() if v}


def poisson_lambda_ue(r: int, mode: str = 'via_inverse_stirling') -> LinearCombo:
    """Estimator of lambda^r over sample noncentral moment products."""
    if r < 1 or r > Config.MAX_ORDER:
        raise DomainError(f"order r={r} outside 1..{Config.MAX_ORDER}")
    if mode == 'via_inverse_stirling':
        combo = LinearCombo()
        for i in range(1, r + 1):
            combo = combo.add(LinearCombo.monomial(Partition.of(i)), stirling1(r, i))
        return combo
    if mode == 'via_products':
        # E mean^j = sum_k c[j][k] lambda^k with c[j][j] = 1
        expectations = {j: _poisson_expectation(Partition((1,) * j)) for j in range(1, r + 1)}
        solution: Dict[int, LinearCombo] = {}
        for k in range(1, r + 1):
            combo = LinearCombo.monomial(Partition((1,) * k))
            for lower in range(1, k):
                coeff = expectations[k].get(lower, ZERO)
                if coeff:
                    combo = combo.add(solution[lower], -coeff)
            solution[k] = combo
        return solution[r]
    raise DomainError(f"unknown Poisson mode {mode!r}")


def verify_poisson(r: int, mode: str) -> bool:
    """E of the estimator equals lambda^r identically in lambda and n."""
    polynomial: Dict[int, RatFunc] = {}
    for key, coeff in poisson_lambda_ue(r, mode).items():
        for degree, value in _poisson_expectation(key).items():
            polynomial[degree] = polynomial.get(degree, ZERO) + coeff * value
    polynomial = {k: v for k, v in polynomial.items() if v}
    ok = polynomial == {r: ONE}
    logger.info(f" [VERIFY] Poisson lambda^{r} ({mode}): {'unbiased' if ok else 'biased'}")
    return ok


def _power_sums(values: Sequence[Fraction], upto: int) -> Dict[int, Fraction]:
    return {k: sum((x ** k for x in values), Fraction(0)) for k in range(1, upto + 1)}


def _distinct_sum(parts: Tuple[int, ...], s: Dict[int, Fraction]) -> Fraction:
    """sum over distinct i_1..i_q of prod x_{i_j}^{parts_j}, by Moebius inversion over set partitions."""
    total = Fraction(0)
    for sigma in enumerate_set_partitions(len(parts)):
        term = Fraction(1)
        for block in sigma.blocks:
            size = len(block)
            term *= (-1) ** (size - 1) * factorial(size - 1) * s[sum(parts[i - 1] for i in block)]
        total += term
    return total


def k_statistic(r: int, d: Union[Dataset, Sequence[Value]]) -> Fraction:
    """
    k_r as the symmetric unbiased estimator of kappa_r: each moment product
    in kappa_r = sum (-1)^(b-1) (b-1)! prod m_|B| is replaced by its
    distinct-index average [shape] / (n)_b.
    """
    values = d.values if isinstance(d, Dataset) else tuple(to_exact(v) for v in d)
    size = len(values)
    if r < 1 or r > Config.MAX_ORDER:
        raise DomainError(f"k-statistics are provided for r = 1..{Config.MAX_ORDER}, not {r}")
    if size < r:
        raise PoleError(f"k_{r} needs more than {r - 1} observations", factor=f"n-{r - 1}", minimal_n=r)
    s = _power_sums(values, r)
    averages: Dict[Tuple[int, ...], Fraction] = {}
    total = Fraction(0)
    for rho in enumerate_set_partitions(r):
        shape = tuple(len(block) for block in rho.blocks)
        key = tuple(sorted(shape))
        if key not in averages:
            falling_n = prod(range(size - len(key) + 1, size + 1))
            averages[key] = _distinct_sum(key, s) / falling_n
        total += (-1) ** (len(key) - 1) * factorial(len(key) - 1) * averages[key]
    return total


def fisher_k_statistic(r: int, d: Union[Dataset, Sequence[Value]]) -> Fraction:
    """Fisher's k-statistic k_r: closed power-sum forms for r = 2, 3, 4, k_statistic above that"""
    values = d.values if isinstance(d, Dataset) else tuple(to_exact(v) for v in d)
    size = len(values)
    if r < 2 or r > Config.MAX_ORDER:
        raise DomainError(f"k-statistics are provided for r = 2..{Config.MAX_ORDER}, not {r}")
    if size <= r - 1:
        raise PoleError(f"k_{r} needs more than {r - 1} observations", factor=f"n-{r - 1}", minimal_n=r)
    if r > 4:
        return k_statistic(r, values)
    s = _power_sums(values, r)
    s1, s2 = s[1], s[2]
    if r == 2:
        return (size * s2 - s1 ** 2) / (size * (size - 1))
    s3 = s[3]
    if r == 3:
        return (size ** 2 * s3 - 3 * size * s2 * s1 + 2 * s1 ** 3) / (size * (size - 1) * (size - 2))
    s4 = s[4]
    numerator = ((size ** 3 + size ** 2) * s4 - 4 * (size ** 2 + size) * s3 * s1
                 - 3 * (size ** 2 - size) * s2 ** 2 + 12 * size * s2 * s1 ** 2 - 6 * s1 ** 4)
    return numerator / (size * (size - 1) * (size - 2) * (size - 3))


def statistic_value(parts: Sequence[int], values: Sequence[Fraction]) -> Fraction:
    """prod Y_i with Y the sample mean for a part 1 and mu-hat_a otherwise."""
    _, central = single_moments(values, max(parts))
    result = Fraction(1)
    for p in parts:
        result *= central[p]
    return result

