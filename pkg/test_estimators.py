#!/usr/bin/env python3
"""
Tests for targets, estimator rows and the unbiased estimates they give
"""
import random
import time
from fractions import Fraction
from itertools import combinations

import pytest

from carver import get_design
from estimators import (Dataset, Target, bernoulli_coeffs, bernoulli_ue, bernoulli_ue_coefficients, c_vector,
                        cumulant_product_ue, dstar, fisher_k_statistic, joint_central_moment, joint_cumulant,
                        k_statistic, minimal_sample_size, polykay, population_value, poisson_lambda_ue,
                        sample_moments, statistic_value, to_exact, ue, verify_poisson)
from exceptions import DomainError, PoleError
from oracle import verify_unbiased
from partitions import Partition
from qfield import N, ONE, ZERO, falling, n

P1, P2, P11, P4, P22 = Partition.of(1), Partition.of(2), Partition.of(1, 1), Partition.of(4), Partition.of(2, 2)


def test_to_exact():
    assert to_exact("1/3") == Fraction(1, 3)
    assert to_exact("0.5") == Fraction(1, 2)
    assert to_exact(" 7 ") == 7
    assert to_exact(2) == 2


def test_dataset_validation():
    with pytest.raises(DomainError):
        Dataset.sample([1, 2, 3], population_size=2)
    with pytest.raises(DomainError):
        Dataset.sample([])
    assert Dataset.sample([1, 2]).infinite
    assert not Dataset.sample([1, 2], 5).infinite
    assert not Dataset.population([1, 2]).infinite


def test_target_parsing():
    target = Target.parse("k(2)*mu(1^2 2)")
    assert target.order == 6
    assert target.kinds == {'k', 'mu'}
    assert str(target) == "k(2)*mu(1^2 2)"
    assert Target.parse("m(1 2)").is_noncentral
    assert Target.parse("jmu(1^2)").depends_on_design
    alias = Target.parse("E[(mean-mu)^2]")
    assert alias.factors == Target.parse("jmu(1^2)").factors
    with pytest.raises(DomainError):
        Target.parse("mu(7)")
    with pytest.raises(DomainError):
        Target.parse("nu(2)")
    with pytest.raises(DomainError):
        Target.parse("")


def test_variance_estimate_from_finite_population():
    assert ue("mu(2)", Dataset.sample([0, 1], population_size=3)) == Fraction(1, 3)


def test_variance_estimate_from_infinite_population():
    assert ue("mu(2)", Dataset.sample([0, 1])) == Fraction(1, 2)
    assert ue("k(2)", Dataset.sample([0, 1, 3])) == fisher_k_statistic(2, [0, 1, 3])


def test_fourth_cumulant_row_infinite():
    row = dstar("k(4)", infinite=True)
    denominator = falling(n - 1, 3)
    assert row.basis == 'central'
    assert row.coefficient(P4) == n ** 2 * (n + 1) / denominator
    assert row.coefficient(P22) == -3 * n ** 2 * (n - 1) / denominator


@pytest.mark.parametrize("r", [2, 3, 4, 5, 6])
def test_cumulant_estimates_match_k_statistics(r):
    rng = random.Random(20 + r)
    for _ in range(3):
        values = [Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(rng.randint(r + 1, r + 3))]
        assert ue(f"k({r})", Dataset.sample(values)) == fisher_k_statistic(r, values)


@pytest.mark.parametrize("r", [2, 3, 4])
def test_closed_forms_match_the_general_k_statistic(r):
    values = [0, 1, 3, 7, 8, 2, Fraction(1, 2)]
    assert k_statistic(r, values) == fisher_k_statistic(r, values)


def test_k_statistic_errors():
    assert fisher_k_statistic(2, [0, 1]) == Fraction(1, 2)
    assert k_statistic(1, [1, 2, 6]) == 3
    with pytest.raises(PoleError):
        fisher_k_statistic(4, [1, 2, 3])
    with pytest.raises(PoleError):
        fisher_k_statistic(6, [1, 2, 3, 4, 5])
    with pytest.raises(DomainError):
        fisher_k_statistic(7, [1, 2, 3, 4, 5, 6, 7, 8])


def test_pole_reports_minimal_sample_size():
    row = dstar("k(4)", infinite=True)
    assert minimal_sample_size(row.entries) == 4
    with pytest.raises(PoleError) as raised:
        row.evaluate(3)
    assert raised.value.minimal_n == 4


def test_mean_square_error_of_the_mean():
    expansion = joint_central_moment((1, 1))
    assert expansion == {P2: (N - n) / (n * (N - 1))}
    row = dstar("E[(mean-mu)^2]")
    assert row.entries == {P2: (N - n) / (N * (n - 1))}


def test_joint_cumulant_of_two_is_the_joint_moment():
    assert joint_cumulant((1, 1)) == joint_central_moment((1, 1))
    assert joint_cumulant((2,)) == joint_central_moment((2,))


def test_estimates_are_unbiased_by_enumeration():
    population = [0, 1, 3, 4, 7, 2]
    size = 4
    samples = list(combinations(population, size))
    for target in ("mu(3)", "k(2 2)", "mu(1 2)", "jmu(1 2)", "jk(1^4)"):
        average = sum(ue(target, Dataset.sample(s, len(population))) for s in samples) / len(samples)
        assert average == population_value(target, population, size), target


def test_noncentral_estimates():
    row = dstar("m(1 2)")
    assert row.basis == 'noncentral'
    population = [1, 2, 4, 5]
    samples = list(combinations(population, 3))
    average = sum(row.apply(Dataset.sample(s, 4)) for s in samples) / len(samples)
    m1 = Fraction(sum(population), 4)
    m2 = Fraction(sum(x * x for x in population), 4)
    assert average == m1 * m2


def test_population_value():
    assert population_value("mu(2)", [0, 1, 2]) == Fraction(2, 3)
    with pytest.raises(DomainError):
        population_value("jmu(1^2)", [0, 1, 2])


def test_polykay_constants():
    vector = polykay("4", infinite=True)
    assert vector.label == 'b'
    assert vector.constant_list() == [1, -3]
    assert vector.row.coefficient(P4) == dstar("k(4)", infinite=True).coefficient(P4)
    assert polykay("2").label == 'a'


def test_cumulant_product_ue_rejects_moments():
    with pytest.raises(DomainError):
        cumulant_product_ue("mu(2)", Dataset.sample([1, 2, 3]))
    assert cumulant_product_ue("k(2)", Dataset.sample([0, 1])) == Fraction(1, 2)


def test_bernoulli_estimates():
    assert bernoulli_ue(1, Dataset.sample([1, 0, 1], 10)) == Fraction(2, 3)
    assert bernoulli_ue(2, Dataset.sample([1, 1, 0, 1])) == Fraction(1, 2)
    coefficients = bernoulli_ue_coefficients(2, infinite=True)
    assert coefficients == [-ONE / (n * (n - 1)), ONE / (n * (n - 1))]
    with pytest.raises(DomainError):
        bernoulli_ue(1, Dataset.sample([0, 2]))


def test_bernoulli_estimate_is_unbiased_in_a_finite_population():
    population = [1, 1, 0, 1, 0]
    samples = list(combinations(population, 3))
    for r in (2, 3):
        average = sum(bernoulli_ue(r, Dataset.sample(s, 5)) for s in samples) / len(samples)
        assert average == Fraction(3, 5) ** r


def test_poisson_estimators():
    assert poisson_lambda_ue(2) == {P2: ONE, P1: -ONE}
    assert poisson_lambda_ue(2, 'via_products') == {P11: ONE, P1: -ONE / n}
    for r in (1, 2, 3):
        assert verify_poisson(r, 'via_inverse_stirling')
        assert verify_poisson(r, 'via_products')
    with pytest.raises(DomainError):
        poisson_lambda_ue(2, 'via_guessing')


def test_sample_moments_and_statistics():
    raw, central = sample_moments([0, 1, 2], 2)
    assert raw[P2] == Fraction(5, 3)
    assert central[P2] == Fraction(2, 3)
    assert central[P11] == 1
    assert statistic_value((1, 2), [0, 1, 2]) == Fraction(2, 3)


def test_mean_products_are_not_joint_statistics():
    product = Target.parse("mu(1^2)*mu(1^3)")
    assert product.expansion() == Target.parse("mu(1^5)").expansion()
    assert product.expansion() != Target.parse("jmu(1^2)*jmu(1^3)").expansion()
    population = [0, 1, 1, 5]
    assert population_value(product, population) == 0
    assert population_value("jmu(1^2)*jmu(1^3)", population, 3) != 0


def test_bernoulli_tables_invert_by_exchange():
    for r in range(1, 7):
        forward, backward = bernoulli_coeffs(r, 'N,n'), bernoulli_coeffs(r, 'n,N')
        for i in range(r):
            for j in range(r):
                total = sum((forward[i][k] * backward[k][j] for k in range(r)), ZERO)
                assert total == (ONE if i == j else ZERO), (r, i, j)


def test_c_vectors():
    lam = get_design().lam

    def P(*parts):
        return lam(Partition(parts))

    assert c_vector(2) == [P(2)]
    assert c_vector(3) == [P(3), P(1, 2) * 3]
    assert c_vector(4) == [P(4), P(1, 3) * 4 + P(2, 2) * 3, P(1, 1, 2) * 6]
    assert c_vector(5) == [P(5), P(1, 4) * 5 + P(2, 3) * 10, P(1, 1, 3) * 10 + P(1, 2, 2) * 15, P(1, 1, 1, 2) * 10]
    assert c_vector(6) == [P(6), P(1, 5) * 6 + P(2, 4) * 15 + P(3, 3) * 10,
                           P(1, 1, 4) * 15 + P(1, 2, 3) * 60 + P(2, 2, 2) * 15,
                           P(1, 1, 1, 3) * 20 + P(1, 1, 2, 2) * 45, P(1, 1, 1, 1, 2) * 15]
    for r in range(2, 7):
        assert bernoulli_coeffs(r)[r - 1] == c_vector(r) + [P(*(1,) * r)]


SWEEP_TARGETS = (
    "m(1 2)", "mu(2)", "mu(3)", "mu(4)", "mu(2 2)", "mu(3^2)", "mu(2 4)",
    "k(2)", "k(3)", "k(4)", "k(5)", "k(6)", "k(2 2)", "k(4)*k(2)", "k(3)*k(3)",
    "jmu(1^2)*jmu(1^2)", "jmu(1 5)", "jmu(1^3)", "jmu(2 3)", "jk(1^4)",
)


def test_unbiased_sweep_through_order_six():
    rng = random.Random(20240607)
    started = time.perf_counter()
    cases = 0
    for target in SWEEP_TARGETS:
        order = Target.parse(target).order
        for _ in range(10):
            size = rng.randint(max(7, order + 2), 9)
            population = [rng.randint(-4, 9) for _ in range(size)]
            n0 = rng.randint(order + 1, size - 1)
            report = verify_unbiased(target, population, n0)
            assert report.ok, (target, population, n0, report.to_dict())
            cases += 1
    assert cases >= 200
    assert time.perf_counter() - started < 60
