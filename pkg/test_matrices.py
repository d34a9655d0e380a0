#!/usr/bin/env python3
"""
Tests for the partition-indexed sampling matrices
"""
from fractions import Fraction

import pytest

from carver import get_design
from exceptions import DomainError, SingularMatrixError
from matrices import (CoeffMatrix, DiagScaler, build_A, build_B, build_C, build_D, build_G, build_G_inverse,
                      build_H, determinant, eigenvalue, eigenvalue_check, from_records, get_inverse, get_matrix,
                      identity, invert, limit_matrix, multiply, verify_inversion_principle)
from partitions import Partition, enumerate_partitions
from qfield import N, ONE, evaluate, n, parse, render

P2, P11 = Partition.of(2), Partition.of(1, 1)


def test_power_sum_matrix_two():
    A = build_A(2)
    assert A.entry(P2, P2) == n / N
    assert A.entry(P11, P2) == n / N - n * (n - 1) / (N * (N - 1))
    assert A.entry(P11, P11) == n * (n - 1) / (N * (N - 1))
    assert not A.entry(P2, P11)


def test_noncentral_matrix_two():
    B = build_B(2)
    assert B.entry(P2, P2) == ONE
    assert B.entry(P11, P2) == (N - n) / (n * (N - 1))
    assert B.entry(P11, P11) == N * (n - 1) / (n * (N - 1))


def test_central_matrix_two():
    C = build_C(2)
    assert C.entry(P2, P2) == N * (n - 1) / (n * (N - 1))
    assert evaluate(C.entry(P2, P2), 2, 3) == Fraction(3, 4)
    assert C.entry(P11, P2) == (N - n) / (n * (N - 1))
    assert C.entry(P11, P11) == ONE


def test_central_matrix_infinite_population():
    C = build_C(2, infinite=True)
    assert C.entry(P2, P2) == (n - 1) / n
    assert C.entry(P11, P2) == ONE / n
    assert C.population == 'infinite'
    assert limit_matrix(build_C(2), 'N-inf') == C


def test_sampling_matrices_are_lower_triangular():
    for r in range(1, 5):
        for family in ('A', 'B', 'C'):
            assert get_matrix(family, r).is_lower_triangular()


def test_cumulant_matrix_conjugates_central():
    G, G_inverse = build_G(4), build_G_inverse(4)
    assert multiply(G, G_inverse).is_identity()
    D = build_D(4)
    assert multiply(multiply(G_inverse, D), G) == build_C(4)
    kappa4 = G.row(Partition.of(4))
    assert kappa4 == {Partition.of(4): ONE, Partition.of(2, 2): -3 * ONE}


def test_noncentral_from_central():
    H = build_H(2)
    assert H.row(P2) == {P2: ONE, P11: ONE}
    assert H.row(P11) == {P11: ONE}


def test_inverse_is_exact():
    for r in range(1, 5):
        C = build_C(r)
        assert multiply(invert(C), C).is_identity()
        assert multiply(C, invert(C)).is_identity()
    assert get_inverse('C', 3) == invert(build_C(3))


def test_infinite_inverse_is_the_limit_of_the_exchanged_matrix():
    for r in (2, 3, 4):
        for family in ('B', 'C'):
            forward = get_matrix(family, r, infinite=True)
            assert get_inverse(family, r, infinite=True) == invert(forward)
            assert multiply(get_inverse(family, r, infinite=True), forward).is_identity()
    assert get_inverse('C', 2, infinite=True).entry(P2, P2) == n / (n - 1)


@pytest.mark.parametrize("r", [5, 6])
def test_inverse_at_high_orders(r):
    for family in ('B', 'C', 'D'):
        matrix = get_matrix(family, r)
        assert multiply(get_inverse(family, r), matrix).is_identity()
    assert multiply(get_inverse('C', r, infinite=True), build_C(r, infinite=True)).is_identity()


def test_inversion_principle():
    for r in range(1, 7):
        for family in ('B', 'C', 'D'):
            report = verify_inversion_principle(r, family)
            assert report['success'], report
    with pytest.raises(DomainError):
        verify_inversion_principle(2, 'A')


def test_swapped_orientation_is_the_inverse():
    assert build_C(3, 'n,N') == invert(build_C(3))


def test_determinant_is_product_of_eigenvalues():
    B = build_B(3)
    expected = ONE
    for pi in enumerate_partitions(3):
        expected = expected * eigenvalue(pi.parts_count)
    assert determinant(B) == expected


def test_eigenvalue_check():
    report = eigenvalue_check(3, points=2, seed=7)
    assert report['success'], report['failures']
    assert report['multiplicity'] == {1: 1, 2: 1, 3: 1}


def test_eigenvalue_check_at_order_six():
    report = eigenvalue_check(6, points=5, seed=11)
    assert report['success'], report['failures']
    assert report['multiplicity'] == {1: 1, 2: 3, 3: 3, 4: 2, 5: 1, 6: 1}


def test_power_sum_matrix_rows_at_orders_five_and_six():
    design = get_design()
    row = build_A(5).row(Partition((1,) * 5))
    assert row[Partition((1,) * 5)] == design.lam(Partition((1,) * 5))
    assert row[Partition((1, 1, 1, 2))] == design.lam(Partition((1, 1, 1, 2))) * 10
    assert row[Partition((1, 2, 2))] == design.lam(Partition((1, 2, 2))) * 15
    pi = Partition((1, 1, 4))
    assert build_A(6).entry(pi, pi) == design.lam(Partition((1, 1, 1)))


def test_singular_matrix():
    order = enumerate_partitions(2)
    with pytest.raises(SingularMatrixError):
        invert(CoeffMatrix('X', order, {(0, 0): ONE}))


def test_limits_and_errors():
    C = build_C(2)
    assert render(C.limit('N-inf').entry(P2, P2)) == "(n-1)/n"
    assert C.limit('n-inf').entry(P2, P2) == N / (N - 1)
    with pytest.raises(DomainError):
        C.limit('x-inf')
    with pytest.raises(DomainError):
        get_matrix('A', 2, infinite=True)
    with pytest.raises(DomainError):
        get_matrix('Z', 2)
    with pytest.raises(DomainError):
        build_C(7)


def test_evaluated_records():
    records = build_C(2).to_records(2, 3)
    assert {'row': '2', 'col': '2', 'value': '3/4'} in records
    assert all(r['value'] != '0' for r in records)


def test_records_rebuild_the_matrix():
    C = build_C(3)
    assert from_records('C', 3, C.to_records(), parse) == C


def test_diagonal_scaler():
    scaler = DiagScaler(3, n)
    assert scaler.diagonal() == [n, n ** 2, n ** 3]
    assert multiply(scaler.as_matrix(), scaler.as_matrix(inverse=True)) == identity(3)
