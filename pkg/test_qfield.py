#!/usr/bin/env python3
"""
Tests for the exact coefficient field QQ(N, n)
"""
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exceptions import DivergenceError, DomainError, PoleError
from partitions import Partition
from qfield import (N, ONE, ZERO, LinearCombo, const, depends_on, e, evaluate, falling, limit_N_inf, limit_n_inf,
                    n, parse, render, swap)

small = st.integers(min_value=-5, max_value=5)
positive = st.integers(min_value=1, max_value=6)


@st.composite
def ratfuncs(draw):
    """(a N + b n + c) / (n + d) with d >= 1, finite at every positive n"""
    a, b, c = draw(small), draw(small), draw(small)
    d = draw(positive)
    return (N * a + n * b + c) / (n + d)


@settings(max_examples=40, deadline=None)
@given(ratfuncs(), ratfuncs(), ratfuncs())
def test_field_axioms(f, g, h):
    assert f + g == g + f
    assert f * g == g * f
    assert (f + g) + h == f + (g + h)
    assert f * (g + h) == f * g + f * h
    assert f - f == ZERO
    if f:
        assert f / f == ONE


@settings(max_examples=40, deadline=None)
@given(ratfuncs(), ratfuncs(), positive, positive)
def test_evaluation_is_a_homomorphism(f, g, n0, N0):
    assert evaluate(f * g, n0, N0) == evaluate(f, n0, N0) * evaluate(g, n0, N0)
    assert evaluate(f + g, n0, N0) == evaluate(f, n0, N0) + evaluate(g, n0, N0)


@settings(max_examples=40, deadline=None)
@given(ratfuncs())
def test_render_parse_round_trip(f):
    assert parse(render(f)) == f


@settings(max_examples=40, deadline=None)
@given(ratfuncs())
def test_swap_is_an_involution(f):
    assert swap(swap(f)) == f


def test_inclusion_probabilities():
    assert evaluate(e(2), 2, 3) == Fraction(1, 3)
    assert evaluate(e(1), 2, 3) == Fraction(2, 3)
    assert e(0) == ONE
    assert evaluate(e(3), 3, 3) == 1
    with pytest.raises(DomainError):
        e(-1)


def test_falling_factorial():
    assert falling(n, 3) == n * (n - 1) * (n - 2)
    assert falling(N, 0) == ONE
    assert parse("(n)_3") == falling(n, 3)
    assert parse("n^2/(n-1)_3") == n ** 2 / falling(n - 1, 3)


def test_swap_exchanges_sizes():
    assert swap(e(1)) == N / n
    assert depends_on(e(1), 0)
    assert not depends_on(limit_N_inf(N * (n - 1) / (n * (N - 1))), 0)


def test_limits():
    f = N * (n - 1) / (n * (N - 1))
    assert limit_N_inf(f) == (n - 1) / n
    assert limit_n_inf(f) == N / (N - 1)
    assert limit_N_inf(e(2)) == ZERO
    with pytest.raises(DivergenceError):
        limit_N_inf(N * n / (n + 1))
    assert render(limit_N_inf(f)) == "(n-1)/n"


def test_evaluate_errors():
    with pytest.raises(PoleError) as raised:
        evaluate(ONE / (n - 1), 1)
    assert raised.value.factor == "n-1"
    with pytest.raises(DomainError):
        evaluate(e(1), 2)


def test_parse_rejects_garbage():
    with pytest.raises(DomainError):
        parse("N +* n")


def test_linear_combo_algebra():
    mu2, mu3 = Partition.of(2), Partition.of(3)
    left = LinearCombo.monomial(mu2, 2).add(LinearCombo.monomial(mu3, n))
    right = LinearCombo.monomial(mu2, ONE)
    product = left * right
    assert product[Partition.of(2, 2)] == const(2)
    assert product[Partition.of(2, 3)] == n
    assert product.order() == 5
    assert product.is_homogeneous()
    assert left.add(left, -1) == LinearCombo()
    assert left.scaled(2) == left.add(left)
    assert left.scaled(0) == LinearCombo()
    assert (LinearCombo.unit() * right) == right
    values = {Partition.of(2, 2): Fraction(1, 2), Partition.of(2, 3): Fraction(3)}
    assert product.apply(values, 4, 9) == Fraction(1) + Fraction(12)
