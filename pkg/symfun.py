#!/usr/bin/env python3
"""
Distinct-index symmetric functions

[pi] sums prod x_i^pi_j over ordered tuples of distinct indices; its
standardised form <pi> = [pi] / (count)_q(pi) is the same statistic on a
sample and on the population it came from, which is the invariance the
sampling matrices rest on. This module also holds the S/T relations for
general kernels and the generalised central-moment eigenfunctions.
"""
import logging
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product
from math import factorial, prod
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from config import Config
from estimators import to_exact
from exceptions import DomainError
from matrices import (CoeffMatrix, DiagScaler, build_B, build_C, build_H, eigenvalue, falling_scaler, invert,
                      multiply)
from oracle import expectation
from partitions import Partition, SetPartition, enumerate_partitions, enumerate_set_partitions, partition_function
from qfield import ONE, N, RatFunc, const, evaluate, n, render

logger = logging.getLogger(__name__)

DIRECTIONS = ('T_in_S', 'S_in_T')

Kernel = Callable[..., Fraction]


def _moebius(sigma: SetPartition) -> int:
    return prod((-1) ** (len(b) - 1) * factorial(len(b) - 1) for b in sigma.blocks)


def _values(d) -> Tuple[Fraction, ...]:
    return tuple(to_exact(v) for v in getattr(d, 'values', d))


def bracket(pi: Union[str, Partition], d) -> Fraction:
    """[pi] through the Moebius sum over set partitions of the q(pi) slots."""
    pi = pi if isinstance(pi, Partition) else Partition.parse(pi)
    values = _values(d)
    power = {}
    total = Fraction(0)
    for sigma in enumerate_set_partitions(pi.parts_count):
        term = Fraction(_moebius(sigma))
        for block in sigma.blocks:
            k = sum(pi.parts[i - 1] for i in block)
            if k not in power:
                power[k] = sum((x ** k for x in values), Fraction(0))
            term *= power[k]
        total += term
    return total


def std_bracket(pi: Union[str, Partition], d) -> Fraction:
    """<pi> = [pi] / (count)_q"""
    pi = pi if isinstance(pi, Partition) else Partition.parse(pi)
    values = _values(d)
    count = len(values)
    if count < pi.parts_count:
        raise DomainError(f"<{pi}> needs at least {pi.parts_count} values, got {count}")
    denominator = prod(count - j for j in range(pi.parts_count))
    return bracket(pi, values) / denominator


@dataclass(frozen=True)
class RelationTerm:
    coefficient: int
    partition: Partition

    @property
    def multiplicity(self) -> int:
        return partition_function(self.partition)


@dataclass(frozen=True)
class Relation:
    """
    X_P(pi)(pi) = sum c Y_P(pi')(pi'), with X, Y the S and T sums over all
    set partitions of the given shape.
    """

    direction: str
    partition: Partition
    terms: Tuple[RelationTerm, ...]

    @property
    def left_symbol(self) -> str:
        return 'T' if self.direction == 'T_in_S' else 'S'

    @property
    def right_symbol(self) -> str:
        return 'S' if self.direction == 'T_in_S' else 'T'

    def coefficient(self, pi: Partition) -> int:
        return next((t.coefficient for t in self.terms if t.partition == pi), 0)

    def render(self) -> str:
        lhs = f"{self.left_symbol}_{partition_function(self.partition)}({self.partition})"
        text = ''
        for term in self.terms:
            magnitude = '' if abs(term.coefficient) == 1 else str(abs(term.coefficient))
            chunk = f"{magnitude}{self.right_symbol}_{term.multiplicity}({term.partition})"
            if not text:
                text = ('-' if term.coefficient < 0 else '') + chunk
            else:
                text += (' - ' if term.coefficient < 0 else ' + ') + chunk
        return f"{lhs} = {text}"


def _coarsens(tau: SetPartition, alpha: SetPartition) -> bool:
    """Every block of alpha sits inside a block of tau."""
    owner = {}
    for k, block in enumerate(tau.blocks):
        for i in block:
            owner[i] = k
    return all(len({owner[i] for i in block}) == 1 for block in alpha.blocks)


def _refinement_weight(alpha: SetPartition, tau: SetPartition) -> int:
    """Moebius function mu(alpha, tau) of the partition lattice."""
    weight = 1
    for block in tau.blocks:
        k = sum(1 for b in alpha.blocks if b[0] in block)
        weight *= (-1) ** (k - 1) * factorial(k - 1)
    return weight


@lru_cache(maxsize=None)
def st_expand(direction: str, pi: Partition) -> Relation:
    """T sums in terms of S sums (all ones) or S in terms of T (Moebius)."""
    if direction not in DIRECTIONS:
        raise DomainError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    if pi.weight > Config.MAX_ORDER:
        raise DomainError(f"relations are tabulated up to order {Config.MAX_ORDER}")

    everything = enumerate_set_partitions(pi.weight)
    sources = [a for a in everything if a.shape() == pi]
    totals: Dict[Partition, int] = defaultdict(int)
    for alpha in sources:
        for tau in everything:
            if _coarsens(tau, alpha):
                weight = 1 if direction == 'T_in_S' else _refinement_weight(alpha, tau)
                totals[tau.shape()] += weight

    terms = []
    for shape in reversed(enumerate_partitions(pi.weight).partitions):
        if totals.get(shape):
            terms.append(RelationTerm(totals[shape] // partition_function(shape), shape))
    return Relation(direction, pi, tuple(terms))


def monomial_kernel(exponents: Sequence[int]) -> Kernel:
    return lambda *args: prod((x ** a for x, a in zip(args, exponents)), start=Fraction(1))


def _pattern_sum(sigma: SetPartition, kernel: Kernel, values: Sequence[Fraction], distinct: bool) -> Fraction:
    slots = len(sigma)
    owner = {}
    for k, block in enumerate(sigma.blocks):
        for i in block:
            owner[i] = k
    chosen = permutations(range(len(values)), slots) if distinct else product(range(len(values)), repeat=slots)
    total = Fraction(0)
    for index in chosen:
        total += kernel(*(values[index[owner[i]]] for i in range(1, sigma.size + 1)))
    return total


def _shape_sum(symbol: str, shape: Partition, kernel: Kernel, values: Sequence[Fraction]) -> Fraction:
    return sum((_pattern_sum(sigma, kernel, values, symbol == 'S')
                for sigma in enumerate_set_partitions(shape.weight) if sigma.shape() == shape), Fraction(0))


def evaluate_relation(relation: Relation, d, kernel: Optional[Kernel] = None,
                      exponents: Optional[Sequence[int]] = None) -> Tuple[Fraction, Fraction]:
    """
    Both sides of a relation for a kernel on r arguments, or for the
    monomial kernel prod x_i^a_i. S uses distinct indices across blocks,
    T unrestricted ones.
    """
    values = _values(d)
    if kernel is None:
        if exponents is None or len(exponents) != relation.partition.weight:
            raise DomainError(f"need {relation.partition.weight} exponents or a kernel")
        kernel = monomial_kernel(exponents)
    left = _shape_sum(relation.left_symbol, relation.partition, kernel, values)
    right = sum((term.coefficient * _shape_sum(relation.right_symbol, term.partition, kernel, values)
                 for term in relation.terms), Fraction(0))
    return left, right


def _bracket_matrix(r: int, family: str, weight: Callable[[SetPartition], int]) -> CoeffMatrix:
    order = enumerate_partitions(r)
    entries = {}
    for i, pi in enumerate(order):
        for sigma in enumerate_set_partitions(pi.parts_count):
            sums = Partition(tuple(sum(pi.parts[k - 1] for k in block) for block in sigma.blocks))
            cell = (i, order.index(sums))
            entries[cell] = entries.get(cell, const(0)) + weight(sigma)
    return CoeffMatrix(family, order, entries, basis='power-sum')


def v_matrix(r: int) -> Tuple[CoeffMatrix, CoeffMatrix]:
    """V with [pi] = sum V s(pi'), and U = V^-1 with s(pi) = sum U [pi']."""
    if r < 1 or r > Config.MAX_ORDER:
        raise DomainError(f"order r={r} outside 1..{Config.MAX_ORDER}")
    return _bracket_matrix(r, 'V', _moebius), _bracket_matrix(r, 'U', lambda sigma: 1)


def standardising_matrix(r: int, symbol: RatFunc) -> CoeffMatrix:
    """E = Dbar^-1 V D, giving <pi> over noncentral moments."""
    V, _ = v_matrix(r)
    falling_inverse = falling_scaler(r, symbol).map(lambda v: ONE / v)
    powers = DiagScaler(r, symbol).as_matrix()
    return multiply(multiply(falling_inverse, V), powers)


LEFT_EIGENVECTORS_3 = (
    ((Fraction(1), Fraction(-3), Fraction(2)), 3),
    ((Fraction(-1, 2), Fraction(1, 2), Fraction(0)), 2),
    ((Fraction(1), Fraction(0), Fraction(0)), 1),
)


def proof_pipeline_check(r: int) -> Dict:
    """B = E_n^-1 E_N and C = F_n^-1 F_N with F = E H."""
    population_side = standardising_matrix(r, N)
    sample_side = standardising_matrix(r, n)
    failures: List[str] = []

    if multiply(invert(sample_side), population_side) != build_B(r):
        failures.append(f"E_n^-1 E_N differs from B_{r}")
    H = build_H(r)
    if multiply(invert(multiply(sample_side, H)), multiply(population_side, H)) != build_C(r):
        failures.append(f"F_n^-1 F_N differs from C_{r}")
    V, U = v_matrix(r)
    if not multiply(U, V).is_identity():
        failures.append(f"U V is not the identity at order {r}")

    if r == 3:
        B = build_B(3)
        for vector, q in LEFT_EIGENVECTORS_3:
            nu = eigenvalue(q)
            for j in range(B.size):
                value = sum((const(v) * B.get(i, j) for i, v in enumerate(vector) if v), const(0))
                if value != const(vector[j]) * nu:
                    failures.append(f"{vector} is not a left eigenvector for nu_{q} (column {B.order[j]})")
                    break

    success = not failures
    logger.info(f" [VERIFY] proof pipeline at order {r}: {'ok' if success else 'failed'}")
    return {'r': r, 'success': success, 'failures': failures}


class KernelStat:
    """Kernel of arity 1, 2 or 3, either a callable or a table over values.

    A table is looked up by its exact key. Pass symmetric=True when the table
    lists each unordered argument tuple once and the kernel is symmetric.
    """

    def __init__(self, arity: int, kernel: Union[Kernel, Dict[Tuple[Fraction, ...], Fraction], None] = None,
                 symmetric: bool = False):
        if arity < 1 or arity > 3:
            raise DomainError(f"kernel eigenfunctions are defined for arity 1..3, got {arity}")
        self.arity = arity
        self.symmetric = symmetric
        if kernel is None:
            kernel = monomial_kernel((1,) * arity)
        if isinstance(kernel, dict):
            self.table = {tuple(to_exact(x) for x in k): to_exact(v) for k, v in kernel.items()}
            self.kernel = self._lookup
        else:
            self.table = None
            self.kernel = kernel

    def _lookup(self, *args) -> Fraction:
        keys = permutations(args) if self.symmetric else (tuple(args),)
        for key in keys:
            if key in self.table:
                return self.table[key]
        raise DomainError(f"kernel table has no value for {tuple(str(a) for a in args)}")

    def __call__(self, *args) -> Fraction:
        return self.kernel(*args)

    def average(self, pattern: Tuple[int, ...], values: Sequence[Fraction]) -> Fraction:
        """E t(X_pattern) with X_1, X_2, ... drawn with replacement from values."""
        letters = max(pattern) + 1
        total = Fraction(0)
        for index in product(range(len(values)), repeat=letters):
            total += self(*(values[index[p]] for p in pattern))
        return total / len(values) ** letters

    def eigenfunction(self, values: Sequence[Fraction]) -> Fraction:
        """a_s(F) for the empirical law of values"""
        if self.arity == 1:
            return self.average((0,), values)
        if self.arity == 2:
            return self.average((0, 0), values) - self.average((0, 1), values)
        return (self.average((0, 0, 0), values)
                - self.average((0, 1, 1), values) - self.average((1, 0, 1), values) - self.average((1, 1, 0), values)
                + 2 * self.average((0, 1, 2), values))


def eigenfunction_value(k: int, d, kernel: Optional[KernelStat] = None) -> Fraction:
    kernel = kernel or KernelStat(k)
    if kernel.arity != k:
        raise DomainError(f"kernel arity {kernel.arity} does not match k={k}")
    return kernel.eigenfunction(_values(d))


def eigen_check(k: int, population, n0: int, kernel: Optional[KernelStat] = None, jobs: int = 1) -> Dict:
    """E a_k(F-hat) over all samples against nu_k a_k(F)."""
    kernel = kernel or KernelStat(k)
    values = _values(population)
    found = expectation(lambda sample: kernel.eigenfunction(sample), values, n0, jobs=jobs)
    nu = evaluate(eigenvalue(k), n0, len(values))
    claimed = nu * kernel.eigenfunction(values)
    success = found == claimed
    logger.info(f" [VERIFY] eigenfunction a_{k} at n={n0}, N={len(values)}: {'ok' if success else 'failed'}")
    return {'k': k, 'success': success, 'expected': claimed, 'found': found, 'eigenvalue': render(eigenvalue(k))}


def invariance_check(pi: Partition, population, n0: int) -> Dict:
    """E <pi>_n = <pi>_N by enumeration."""
    values = _values(population)
    found = expectation(lambda sample: std_bracket(pi, sample), values, n0)
    claimed = std_bracket(pi, values)
    return {'partition': str(pi), 'success': found == claimed, 'expected': claimed, 'found': found}

