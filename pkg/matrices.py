#!/usr/bin/env python3
"""
Partition-indexed sampling matrices over QQ(N, n)

    E S_(pi)      = sum A[pi, pi'] s_(pi')       power sums
    E m-hat(pi)   = sum B[pi, pi'] m(pi')        noncentral moments
    E mu-hat(pi)  = sum C[pi, pi'] mu(pi')       central moments, unit parts = mean
    E k-hat(pi)   = sum D[pi, pi'] kappa(pi')    cumulants, D = G C G^-1

Rows and columns follow PartitionOrder. A, B and C are lower triangular in
that order; every matrix here is block lower triangular, which is what
invert() exploits.
"""
import logging
import random
import threading
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from carver import coincidence_table, get_design
from config import Config
from exceptions import DivergenceError, DomainError, SingularMatrixError
from partitions import Partition, PartitionOrder, enumerate_partitions, enumerate_set_partitions
from qfield import (ONE, ZERO, LinearCombo, RatFunc, evaluate, falling, limit_N_inf,
                    limit_n_inf, render)

logger = logging.getLogger(__name__)

FAMILIES = ('A', 'B', 'C', 'D', 'G', 'G_inverse', 'H')
LIMITS = {'N-inf': limit_N_inf, 'n-inf': limit_n_inf}

Cell = Tuple[int, int]


class CoeffMatrix:
    """Sparse square matrix of RatFunc entries indexed by a PartitionOrder"""

    def __init__(self, family: str, order: PartitionOrder, entries: Dict[Cell, RatFunc],
                 basis: str = 'central', orientation: str = 'N,n', population: str = 'finite'):
        self.family = family
        self.order = order
        self.basis = basis
        self.orientation = orientation
        self.population = population
        self.entries: Dict[Cell, RatFunc] = {k: v for k, v in entries.items() if v}

    @property
    def r(self) -> int:
        return self.order.r

    @property
    def size(self) -> int:
        return len(self.order)

    def __repr__(self) -> str:
        return f"CoeffMatrix({self.family}_{self.r}, {self.orientation}, {self.population})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoeffMatrix):
            return NotImplemented
        return self.order.partitions == other.order.partitions and self.entries == other.entries

    def get(self, i: int, j: int) -> RatFunc:
        return self.entries.get((i, j), ZERO)

    def entry(self, row: Partition, col: Partition) -> RatFunc:
        return self.get(self.order.index(row), self.order.index(col))

    def row(self, pi: Partition) -> Dict[Partition, RatFunc]:
        i = self.order.index(pi)
        return {self.order[j]: v for (a, j), v in sorted(self.entries.items()) if a == i}

    def row_combo(self, pi: Partition) -> LinearCombo:
        return LinearCombo(self.row(pi))

    def derive(self, family: str, entries: Dict[Cell, RatFunc], **overrides) -> 'CoeffMatrix':
        fields = dict(basis=self.basis, orientation=self.orientation, population=self.population)
        fields.update(overrides)
        return CoeffMatrix(family, self.order, entries, **fields)

    def __matmul__(self, other: 'CoeffMatrix') -> 'CoeffMatrix':
        return multiply(self, other)

    def is_identity(self) -> bool:
        return not self.residuals()

    def residuals(self) -> List[Tuple[Partition, Partition, RatFunc]]:
        """Entries that keep the matrix away from the identity."""
        found = []
        for i in range(self.size):
            for j in range(self.size):
                value = self.get(i, j) - (ONE if i == j else ZERO)
                if value:
                    found.append((self.order[i], self.order[j], value))
        return found

    def is_lower_triangular(self) -> bool:
        return all(i >= j for (i, j) in self.entries)

    def minus_block(self) -> 'CoeffMatrix':
        """Restriction to the partitions without unit parts."""
        minus = self.order.minus()
        sub = PartitionOrder(self.r, minus)
        picked = {}
        for a, p in enumerate(minus):
            for b, q in enumerate(minus):
                value = self.entry(p, q)
                if value:
                    picked[(a, b)] = value
        return CoeffMatrix(self.family, sub, picked, self.basis, self.orientation, self.population)

    def map(self, func: Callable[[RatFunc], RatFunc], family: Optional[str] = None, **overrides) -> 'CoeffMatrix':
        return self.derive(family or self.family, {k: func(v) for k, v in self.entries.items()}, **overrides)

    def evaluate(self, n0, N0=None) -> Dict[Cell, Fraction]:
        return {k: evaluate(v, n0, N0) for k, v in self.entries.items()}

    def limit(self, which: str) -> 'CoeffMatrix':
        return limit_matrix(self, which)

    def to_records(self, n0=None, N0=None) -> List[Dict[str, str]]:
        """Nonzero entries as {"row", "col", "value"}; evaluated when n0 is given."""
        records = []
        for (i, j), value in sorted(self.entries.items()):
            if n0 is None:
                text = render(value)
            else:
                text = str(evaluate(value, n0, N0))
            records.append({'row': str(self.order[i]), 'col': str(self.order[j]), 'value': text})
        return records


class DiagScaler:
    """diag(x^q(pi)) for x = N or n"""

    def __init__(self, r: int, symbol: RatFunc):
        self.order = enumerate_partitions(r)
        self.symbol = symbol

    def diagonal(self) -> List[RatFunc]:
        return [self.symbol ** pi.parts_count for pi in self.order]

    def as_matrix(self, inverse: bool = False) -> CoeffMatrix:
        entries = {}
        for i, value in enumerate(self.diagonal()):
            entries[(i, i)] = ONE / value if inverse else value
        return CoeffMatrix('diag', self.order, entries, basis='scaling')


def multiply(left: CoeffMatrix, right: CoeffMatrix) -> CoeffMatrix:
    if left.order.partitions != right.order.partitions:
        raise DomainError(f"cannot multiply {left!r} by {right!r}: different index sets")
    by_row: Dict[int, List[Tuple[int, RatFunc]]] = {}
    for (k, j), value in right.entries.items():
        by_row.setdefault(k, []).append((j, value))
    out: Dict[Cell, RatFunc] = {}
    for (i, k), a in left.entries.items():
        for j, b in by_row.get(k, ()):
            out[(i, j)] = out.get((i, j), ZERO) + a * b
    return left.derive(f"{left.family}{right.family}", out)


def identity(r: int) -> CoeffMatrix:
    order = enumerate_partitions(r)
    return CoeffMatrix('I', order, {(i, i): ONE for i in range(len(order))}, basis='identity')


_matrix_lock = threading.RLock()
_matrix_cache: Dict[Tuple, CoeffMatrix] = {}


def _cached(key: Tuple, builder: Callable[[], CoeffMatrix]) -> CoeffMatrix:
    with _matrix_lock:
        if key in _matrix_cache:
            return _matrix_cache[key]
    built = builder()
    with _matrix_lock:
        _matrix_cache.setdefault(key, built)
        logger.info(f" [MATRIX] built {key[0]}_{key[1]} {' '.join(str(k) for k in key[2:])}".rstrip())
        return _matrix_cache[key]


def _check_order(r: int) -> PartitionOrder:
    if r < 1 or r > Config.MAX_ORDER:
        raise DomainError(f"matrix order r={r} outside 1..{Config.MAX_ORDER}")
    return enumerate_partitions(r)


def build_A(r: int, orientation: str = 'N,n') -> CoeffMatrix:
    """Expected sample power-sum products over population power-sum products."""
    order = _check_order(r)
    design = get_design(orientation)

    def builder():
        entries: Dict[Cell, RatFunc] = {}
        for i, pi in enumerate(order):
            for sums, shapes in coincidence_table(pi.parts).items():
                total = ZERO
                for shape, count in shapes.items():
                    total = total + design.lam(shape) * count
                entries[(i, order.index(sums))] = total
        return CoeffMatrix('A', order, entries, 'power-sum', orientation)

    return _cached(('A', r, orientation), builder)


def build_B(r: int, orientation: str = 'N,n', infinite: bool = False) -> CoeffMatrix:
    """Noncentral matrix D_n^-1 A D_N, or its limit for an infinite population."""
    order = _check_order(r)
    design = get_design(orientation, infinite)

    def builder():
        entries: Dict[Cell, RatFunc] = {}
        for i, pi in enumerate(order):
            scale = design.inverse_sample_power(pi.parts_count)
            for sums, shapes in coincidence_table(pi.parts).items():
                total = ZERO
                for shape, count in shapes.items():
                    total = total + design.weight(shape) * count
                entries[(i, order.index(sums))] = total * scale
        return CoeffMatrix('B', order, entries, 'noncentral', orientation, design.population)

    return _cached(('B', r, orientation, design.population), builder)


def build_C(r: int, orientation: str = 'N,n', infinite: bool = False) -> CoeffMatrix:
    """
    Central matrix by binomial lifting of the unit parts:

        C[1^i p, 1^j p'] = C(i, j) T(i - j, p)[p']

    where T(k, p) = E[(mean - mu)^k prod mu-hat(p)] at mu = 0.
    """
    order = _check_order(r)
    design = get_design(orientation, infinite)

    def builder():
        entries: Dict[Cell, RatFunc] = {}
        for row, pi in enumerate(order):
            i = pi.unit_count
            core = pi.core
            core_parts = core.parts if core else ()
            for j in range(i + 1):
                expectation = design.statistic_expectation((1,) * (i - j) + core_parts)
                for key, value in expectation.items():
                    units = Partition((1,) * j) if j else None
                    if key is None:
                        col = units
                    else:
                        col = key if units is None else units.join(key)
                    if col is None:
                        continue
                    cell = (row, order.index(col))
                    entries[cell] = entries.get(cell, ZERO) + value * comb(i, j)
        return CoeffMatrix('C', order, entries, 'central', orientation, design.population)

    return _cached(('C', r, orientation, design.population), builder)


@lru_cache(maxsize=None)
def cumulant_in_central(k: int) -> LinearCombo:
    """kappa_k over central moment products; kappa_1 is the mean."""
    if k == 1:
        return LinearCombo.monomial(Partition.of(1))
    combo = LinearCombo()
    for sigma in enumerate_set_partitions(k):
        if any(len(block) == 1 for block in sigma.blocks):
            continue
        b = len(sigma)
        combo = combo.add(LinearCombo.monomial(sigma.shape()), (-1) ** (b - 1) * factorial(b - 1))
    return combo


@lru_cache(maxsize=None)
def central_in_cumulant(k: int) -> LinearCombo:
    """mu_k over cumulant products; the mean maps to kappa_1."""
    if k == 1:
        return LinearCombo.monomial(Partition.of(1))
    combo = LinearCombo()
    for sigma in enumerate_set_partitions(k):
        if any(len(block) == 1 for block in sigma.blocks):
            continue
        combo = combo.add(LinearCombo.monomial(sigma.shape()))
    return combo


@lru_cache(maxsize=None)
def noncentral_in_central(a: int) -> LinearCombo:
    """m_a = sum_j C(a, j) mean^(a-j) mu_j with mu_1 = 0."""
    combo = LinearCombo.monomial(Partition((1,) * a))
    for j in range(2, a + 1):
        key = Partition((j,) + (1,) * (a - j))
        combo = combo.add(LinearCombo.monomial(key), comb(a, j))
    return combo


def _product_matrix(family: str, r: int, basis: str, factor: Callable[[int], LinearCombo]) -> CoeffMatrix:
    order = _check_order(r)

    def builder():
        entries: Dict[Cell, RatFunc] = {}
        for i, pi in enumerate(order):
            combo = LinearCombo.unit()
            for part in pi.parts:
                combo = combo * factor(part)
            for key, value in combo.items():
                entries[(i, order.index(key))] = value
        return CoeffMatrix(family, order, entries, basis)

    return _cached((family, r), builder)


def build_G(r: int) -> CoeffMatrix:
    """kappa(pi) = sum G[pi, pi'] mu(pi')"""
    return _product_matrix('G', r, 'cumulant-from-central', cumulant_in_central)


def build_G_inverse(r: int) -> CoeffMatrix:
    return _product_matrix('G_inverse', r, 'central-from-cumulant', central_in_cumulant)


def build_H(r: int) -> CoeffMatrix:
    """m(pi) = sum H[pi, pi'] mu(pi')"""
    return _product_matrix('H', r, 'noncentral-from-central', noncentral_in_central)


def build_D(r: int, orientation: str = 'N,n', infinite: bool = False) -> CoeffMatrix:
    """Cumulant matrix G C G^-1"""
    design = get_design(orientation, infinite)

    def builder():
        product = multiply(multiply(build_G(r), build_C(r, orientation, infinite)), build_G_inverse(r))
        return product.derive('D', product.entries, basis='cumulant', orientation=orientation,
                              population=design.population)

    return _cached(('D', r, orientation, design.population), builder)


def get_matrix(family: str, r: int, orientation: str = 'N,n', infinite: bool = False) -> CoeffMatrix:
    """Dispatch a family name to its builder"""
    if family == 'A':
        if infinite:
            raise DomainError("A is only defined for a finite population")
        return build_A(r, orientation)
    if family in ('B', 'C', 'D'):
        return {'B': build_B, 'C': build_C, 'D': build_D}[family](r, orientation, infinite)
    if family in ('G', 'G_inverse', 'H'):
        return {'G': build_G, 'G_inverse': build_G_inverse, 'H': build_H}[family](r)
    raise DomainError(f"unknown matrix family {family!r}; expected one of {FAMILIES}")


def get_inverse(family: str, r: int, orientation: str = 'N,n', infinite: bool = False) -> CoeffMatrix:
    """
    Cached inverse of a family matrix. B and C, and D in a finite population,
    are inverted by exchanging N and n; their infinite-population inverses
    are the N -> inf limit of the exchanged finite matrix. Everything else
    goes through exact elimination.
    """
    population = 'infinite' if infinite else 'finite'

    def builder():
        matrix = get_matrix(family, r, orientation, infinite)
        if family in ('B', 'C', 'D') and not infinite:
            swapped = get_matrix(family, r, _swapped(orientation))
        elif family in ('B', 'C') and orientation == 'N,n':
            swapped = limit_matrix(get_matrix(family, r, 'n,N'), 'N-inf')
        else:
            return invert(matrix)
        return matrix.derive(f"{family}^-1", {cell: value for cell, value in swapped.entries.items() if value})

    return _cached((f"{family}^-1", r, orientation, population), builder)


def _diagonal_blocks(matrix: CoeffMatrix) -> List[List[int]]:
    """Finest split into diagonal blocks of a block lower triangular matrix."""
    reach = [-1] * matrix.size
    for (i, j) in matrix.entries:
        reach[i] = max(reach[i], j)

    blocks, start, furthest = [], 0, -1
    for i in range(matrix.size):
        furthest = max(furthest, reach[i])
        if furthest <= i:
            blocks.append(list(range(start, i + 1)))
            start = i + 1
    if start < matrix.size:
        blocks.append(list(range(start, matrix.size)))
    return blocks


def _fraction_free_inverse(rows: List[List[RatFunc]], label: str) -> Tuple[List[List[RatFunc]], RatFunc]:
    """
    Gauss-Jordan over QQ[N, n] with exact quotients (Bareiss), after
    clearing each row's denominators. Returns the inverse and determinant.
    """
    size = len(rows)
    ring = ONE.numer.ring
    scales, work = [], []
    for row in rows:
        lcm = ring.one
        for value in row:
            if value:
                lcm = lcm.lcm(value.denom)
        scales.append(lcm)
        work.append([value.numer * lcm.exquo(value.denom) if value else ring.zero for value in row]
                    + [ring.one if k == len(work) else ring.zero for k in range(size)])

    previous = ring.one
    sign = 1
    for k in range(size):
        pivot_row = next((p for p in range(k, size) if work[p][k]), None)
        if pivot_row is None:
            raise SingularMatrixError(f"no pivot in column {k} while inverting {label}")
        if pivot_row != k:
            work[k], work[pivot_row] = work[pivot_row], work[k]
            sign = -sign
        pivot = work[k][k]
        for i in range(size):
            if i == k:
                continue
            factor = work[i][k]
            work[i] = [(pivot * a - factor * b).exquo(previous) for a, b in zip(work[i], work[k])]
        previous = pivot

    det_scaled = previous * sign
    to_field = ONE.field.new
    inverse = [[to_field(work[i][size + j] * scales[j], work[i][i]) for j in range(size)]
               for i in range(size)]
    scale_product = ring.one
    for s in scales:
        scale_product = scale_product * s
    return inverse, to_field(det_scaled, scale_product)


def _block_inverses(matrix: CoeffMatrix):
    blocks = _diagonal_blocks(matrix)
    inverses, determinant = [], ONE
    for block in blocks:
        if len(block) == 1:
            value = matrix.get(block[0], block[0])
            if not value:
                raise SingularMatrixError(f"zero diagonal entry at {matrix.order[block[0]]} in {matrix!r}")
            inverses.append([[ONE / value]])
            determinant = determinant * value
        else:
            rows = [[matrix.get(i, j) for j in block] for i in block]
            inverse, det = _fraction_free_inverse(rows, repr(matrix))
            inverses.append(inverse)
            determinant = determinant * det
    return blocks, inverses, determinant


def invert(matrix: CoeffMatrix) -> CoeffMatrix:
    """
    Exact inverse. Diagonal blocks are inverted fraction-free, the blocks
    below the diagonal by forward substitution:

        X[b, c] = -X[b, b] sum_{c <= l < b} M[b, l] X[l, c]
    """
    blocks, inverses, _ = _block_inverses(matrix)
    result: Dict[Cell, RatFunc] = {}

    def put_block(bi, ci, values):
        for a, i in enumerate(blocks[bi]):
            for b, j in enumerate(blocks[ci]):
                if values[a][b]:
                    result[(i, j)] = values[a][b]

    for b in range(len(blocks)):
        put_block(b, b, inverses[b])
        for c in range(b - 1, -1, -1):
            # accumulate sum_l M[b, l] X[l, c]
            acc = [[ZERO] * len(blocks[c]) for _ in blocks[b]]
            for l in range(c, b):
                for a, i in enumerate(blocks[b]):
                    for m in blocks[l]:
                        coeff = matrix.get(i, m)
                        if not coeff:
                            continue
                        for d, j in enumerate(blocks[c]):
                            x = result.get((m, j))
                            if x:
                                acc[a][d] = acc[a][d] + coeff * x
            diag = inverses[b]
            values = [[-sum((diag[a][t] * acc[t][d] for t in range(len(blocks[b]))), ZERO)
                       for d in range(len(blocks[c]))] for a in range(len(blocks[b]))]
            put_block(b, c, values)

    logger.debug(f" [MATRIX] inverted {matrix!r} with {len(blocks)} diagonal blocks")
    return matrix.derive(f"{matrix.family}^-1", result)


def determinant(matrix: CoeffMatrix) -> RatFunc:
    return _block_inverses(matrix)[2]


def limit_matrix(matrix: CoeffMatrix, which: str) -> CoeffMatrix:
    """Entrywise limit as N or n tends to infinity."""
    if which not in LIMITS:
        raise DomainError(f"limit must be one of {sorted(LIMITS)}, got {which!r}")
    func = LIMITS[which]
    entries: Dict[Cell, RatFunc] = {}
    for (i, j), value in matrix.entries.items():
        try:
            entries[(i, j)] = func(value)
        except DivergenceError as e:
            raise DivergenceError(f"entry ({matrix.order[i]}, {matrix.order[j]}) of {matrix!r}: {str(e)}")
    return matrix.derive(matrix.family, entries, population=f"limit {which}")


def _swapped(orientation: str) -> str:
    return 'n,N' if orientation == 'N,n' else 'N,n'


def verify_inversion_principle(r: int, family: str = 'C', infinite: bool = False) -> Dict:
    """
    Check M(N, n) M(n, N) = I and the same statement on the block of
    partitions without unit parts.
    """
    if family not in ('B', 'C', 'D'):
        raise DomainError(f"the inversion principle covers B, C and D, not {family!r}")
    forward = get_matrix(family, r, 'N,n', infinite)
    backward = get_matrix(family, r, 'n,N', infinite)
    residuals = multiply(forward, backward).residuals()
    minus_residuals = multiply(forward.minus_block(), backward.minus_block()).residuals()
    success = not residuals and not minus_residuals
    if success:
        logger.info(f" [VERIFY] inversion principle holds for {family}_{r}")
    else:
        logger.warning(f" [VERIFY] inversion principle fails for {family}_{r}: {len(residuals)} residuals")
    return {
        'family': family,
        'r': r,
        'success': success,
        'residuals': [(str(p), str(q), render(v)) for p, q, v in residuals],
        'minus_residuals': [(str(p), str(q), render(v)) for p, q, v in minus_residuals],
    }


def eigenvalue(i: int, orientation: str = 'N,n') -> RatFunc:
    """nu_i = e_i / e_1^i"""
    design = get_design(orientation)
    return design.e(i) / design.e(1) ** i


def _rank(rows: List[List[Fraction]]) -> int:
    rows = [list(row) for row in rows]
    rank, width = 0, len(rows[0]) if rows else 0
    for col in range(width):
        pivot = next((p for p in range(rank, len(rows)) if rows[p][col]), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for p in range(len(rows)):
            if p != rank and rows[p][col]:
                ratio = rows[p][col] / rows[rank][col]
                rows[p] = [a - ratio * b for a, b in zip(rows[p], rows[rank])]
        rank += 1
    return rank


def eigenvalue_check(r: int, points: int = 5, seed: Optional[int] = None) -> Dict:
    """
    B_r has eigenvalue nu_i with multiplicity #{pi : q(pi) = i}: the
    diagonal carries nu_q(pi), det(B) is their product, and B - nu_i I
    has the right nullity at random points.
    """
    matrix = build_B(r)
    order = matrix.order
    rng = random.Random(Config.RANDOM_SEED if seed is None else seed)
    failures: List[str] = []

    expected_det = ONE
    for k, pi in enumerate(order):
        nu = eigenvalue(pi.parts_count)
        expected_det = expected_det * nu
        if matrix.get(k, k) != nu:
            failures.append(f"diagonal at {pi} is {render(matrix.get(k, k))}, expected {render(nu)}")
    if determinant(matrix) != expected_det:
        failures.append("determinant is not the product of the eigenvalues")

    multiplicity = {i: sum(1 for pi in order if pi.parts_count == i) for i in range(1, r + 1)}
    for _ in range(points):
        n0 = rng.randint(r + 1, 4 * r + 4)
        N0 = n0 + rng.randint(1, 40)
        values = matrix.evaluate(n0, N0)
        for i, count in multiplicity.items():
            nu = evaluate(eigenvalue(i), n0, N0)
            rows = [[values.get((a, b), Fraction(0)) - (nu if a == b else 0) for b in range(len(order))]
                    for a in range(len(order))]
            nullity = len(order) - _rank(rows)
            if nullity != count:
                failures.append(f"nu_{i} at n={n0}, N={N0} has nullity {nullity}, expected {count}")

    success = not failures
    logger.info(f" [VERIFY] eigenstructure of B_{r}: {'ok' if success else 'failed'}")
    return {'r': r, 'success': success, 'failures': failures, 'multiplicity': multiplicity}


def falling_scaler(r: int, symbol: RatFunc) -> CoeffMatrix:
    """diag((x)_q(pi))"""
    order = enumerate_partitions(r)
    return CoeffMatrix('diag', order, {(i, i): falling(symbol, pi.parts_count) for i, pi in enumerate(order)},
                       basis='scaling')


def from_records(family: str, r: int, records: Sequence[Dict], parse_value: Callable[[str], RatFunc],
                 **fields) -> CoeffMatrix:
    """Rebuild a matrix from to_records() output."""
    order = enumerate_partitions(r)
    entries = {}
    for record in records:
        cell = (order.index(Partition.parse(record['row'])), order.index(Partition.parse(record['col'])))
        entries[cell] = parse_value(record['value'])
    return CoeffMatrix(family, order, entries, **fields)
