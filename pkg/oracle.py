#!/usr/bin/env python3
"""
Exhaustive-enumeration ground truth

Expectations under simple random sampling without replacement are averages
over all C(N, n) index subsets of a small population. Everything is exact,
so an unbiased estimator must reproduce its target to the last digit.
"""
import logging
import random
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from itertools import combinations, combinations_with_replacement
from math import comb, factorial
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from more_itertools import divide

from config import Config
from estimators import Target, as_target, dstar, population_value, single_moments, to_exact
from exceptions import DomainError
from matrices import build_G, get_matrix
from partitions import Partition
from qfield import evaluate

logger = logging.getLogger(__name__)

Statistic = Callable[[Tuple[Fraction, ...]], Fraction]


@dataclass(frozen=True)
class OraclePopulation:
    """Small finite population; repeated values are separate units"""

    values: Tuple[Fraction, ...]

    def __post_init__(self):
        values = tuple(to_exact(v) for v in self.values)
        if not values:
            raise DomainError("an oracle population needs at least one value")
        if len(values) > Config.ORACLE_MAX_N:
            raise DomainError(f"oracle populations are limited to N <= {Config.ORACLE_MAX_N}, got {len(values)}")
        object.__setattr__(self, 'values', values)

    @classmethod
    def of(cls, values: Iterable) -> 'OraclePopulation':
        return cls(tuple(values))

    @property
    def size(self) -> int:
        return len(self.values)


@dataclass
class OracleReport:
    statistic: str
    expectation: Fraction
    claimed: Fraction
    verdict: str
    difference: Fraction

    @classmethod
    def compare(cls, statistic: str, expectation: Fraction, claimed: Fraction) -> 'OracleReport':
        verdict = 'equal' if expectation == claimed else 'unequal'
        return cls(statistic, expectation, claimed, verdict, expectation - claimed)

    @property
    def ok(self) -> bool:
        return self.verdict == 'equal'

    def to_dict(self) -> Dict[str, str]:
        return {k: str(v) for k, v in asdict(self).items()}


def _population(pop: Union[OraclePopulation, Sequence]) -> OraclePopulation:
    return pop if isinstance(pop, OraclePopulation) else OraclePopulation.of(pop)


def _sum_chunk(stat: Statistic, values: Tuple[Fraction, ...], chunk: List[Tuple[int, ...]]) -> Fraction:
    total = Fraction(0)
    for index in chunk:
        total += stat(tuple(values[i] for i in index))
    return total


def expectation(stat: Statistic, pop: Union[OraclePopulation, Sequence], n: int,
                shuffle_seed: Optional[int] = None, jobs: int = 1) -> Fraction:
    """Exact mean of stat over every sample of size n."""
    pop = _population(pop)
    if n < 1 or n > pop.size:
        raise DomainError(f"sample size n={n} outside 1..{pop.size}")

    values = pop.values
    if shuffle_seed is not None:
        shuffled = list(values)
        random.Random(shuffle_seed).shuffle(shuffled)
        values = tuple(shuffled)

    subsets = list(combinations(range(pop.size), n))
    if jobs <= 1:
        total = _sum_chunk(stat, values, subsets)
    else:
        chunks = [list(part) for part in divide(jobs, subsets)]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            total = sum(pool.map(lambda chunk: _sum_chunk(stat, values, chunk), chunks), Fraction(0))

    logger.debug(f" [ORACLE] averaged {len(subsets)} samples of size {n} from N={pop.size}")
    return total / comb(pop.size, n)


def _draw_weight(index: Tuple[int, ...]) -> int:
    """Number of ordered draws that give the multiset index."""
    weight = factorial(len(index))
    for count in Counter(index).values():
        weight //= factorial(count)
    return weight


def expectation_iid(stat: Statistic, pop: Union[OraclePopulation, Sequence], n: int, jobs: int = 1) -> Fraction:
    """
    Exact mean of a symmetric stat over n independent draws from the values
    of pop, i.e. sampling from an infinite population with pop's law.
    """
    pop = _population(pop)
    if n < 1:
        raise DomainError(f"sample size n={n} must be positive")

    values = pop.values
    multisets = list(combinations_with_replacement(range(pop.size), n))

    def chunk_total(chunk: List[Tuple[int, ...]]) -> Fraction:
        total = Fraction(0)
        for index in chunk:
            total += _draw_weight(index) * stat(tuple(values[i] for i in index))
        return total

    if jobs <= 1:
        total = chunk_total(multisets)
    else:
        chunks = [list(part) for part in divide(jobs, multisets)]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            total = sum(pool.map(chunk_total, chunks), Fraction(0))

    logger.debug(f" [ORACLE] averaged {len(multisets)} draw patterns of size {n} from {pop.size} values")
    return total / pop.size ** n


def estimator_statistic(target: Union[str, Target], n: int, N: Optional[int], infinite: bool = False) -> Statistic:
    """The estimator of a target as a function of one sample."""
    vector = dstar(target, infinite)
    coefficients = vector.evaluate(n, None if infinite else N)
    r = max(k.weight for k in coefficients)

    def stat(sample: Tuple[Fraction, ...]) -> Fraction:
        raw, central = single_moments(sample, r)
        singles = raw if vector.basis == 'noncentral' else central
        total = Fraction(0)
        for key, coeff in coefficients.items():
            term = coeff
            for part in key.parts:
                term *= singles[part]
            total += term
        return total

    return stat


def verify_unbiased(target: Union[str, Target], pop: Union[OraclePopulation, Sequence], n: int,
                    jobs: int = 1, infinite: bool = False) -> OracleReport:
    """
    Enumerate the estimator's expectation and compare it with the target.
    With infinite=True the sample is n independent draws from pop's values.
    """
    target = as_target(target)
    pop = _population(pop)
    stat = estimator_statistic(target, n, pop.size, infinite)
    if infinite:
        found = expectation_iid(stat, pop, n, jobs=jobs)
    else:
        found = expectation(stat, pop, n, jobs=jobs)
    claimed = population_value(target, pop.values, n, infinite=infinite)
    report = OracleReport.compare(f"ue[{target}]", found, claimed)
    logger.info(f" [ORACLE] {report.statistic} n={n} N={'inf' if infinite else pop.size}: {report.verdict}")
    return report


def _product(pi: Partition, singles: Dict[int, Fraction]) -> Fraction:
    value = Fraction(1)
    for part in pi.parts:
        value *= singles[part]
    return value


def _power_sums(values: Sequence[Fraction], upto: int) -> Dict[int, Fraction]:
    return {k: sum((x ** k for x in values), Fraction(0)) for k in range(1, upto + 1)}


def _cumulant_product(pi: Partition, central: Dict[int, Fraction], G) -> Fraction:
    return sum((evaluate(c, 1, 1) * _product(col, central) for col, c in G.row(pi).items()), Fraction(0))


def verify_expectation_row(family: str, r: int, pi: Union[str, Partition],
                           pop: Union[OraclePopulation, Sequence], n: int, infinite: bool = False) -> OracleReport:
    """
    E stat(pi) against row pi of A, B, C or D evaluated at (n, N), where stat
    is the product of sample power sums, noncentral, central or cumulant
    moments.
    """
    if family not in ('A', 'B', 'C', 'D'):
        raise DomainError(f"expectation rows are checked for A, B, C and D, not {family!r}")
    pi = pi if isinstance(pi, Partition) else Partition.parse(pi)
    pop = _population(pop)
    matrix = get_matrix(family, r, infinite=infinite)
    row = matrix.row(pi)
    G = build_G(r)

    def singles(values):
        if family == 'A':
            return _power_sums(values, r)
        raw, central = single_moments(values, r)
        return raw if family == 'B' else central

    def basis(col, values_singles):
        if family == 'D':
            return _cumulant_product(col, values_singles, G)
        return _product(col, values_singles)

    def stat(sample):
        return basis(pi, singles(sample))

    population_singles = singles(pop.values)
    claimed = Fraction(0)
    for col, coeff in row.items():
        claimed += evaluate(coeff, n, None if infinite else pop.size) * basis(col, population_singles)

    found = expectation_iid(stat, pop, n) if infinite else expectation(stat, pop, n)
    return OracleReport.compare(f"{family}_{r}[{pi}]", found, claimed)
