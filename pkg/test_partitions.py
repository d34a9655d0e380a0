#!/usr/bin/env python3
"""
Tests for partition enumeration and counting
"""
import pytest

from exceptions import DomainError
from partitions import (Partition, SetPartition, bell_number, enumerate_partitions, enumerate_set_partitions,
                        join_all, partition_function, stirling1, stirling2)


def test_parse_forms_agree():
    expected = Partition((1, 1, 2))
    assert Partition.parse("1^2 2") == expected
    assert Partition.parse("1 1 2") == expected
    assert Partition.parse("1,1,2") == expected
    assert Partition.parse("112") == expected
    assert Partition.parse("(1^2 2)") == expected


def test_str_uses_exponents():
    assert str(Partition.of(2, 1, 1)) == "1^2 2"
    assert str(Partition.of(3, 3)) == "3^2"
    assert str(Partition.of(5)) == "5"


def test_bad_partitions_are_rejected():
    with pytest.raises(DomainError):
        Partition.parse("")
    with pytest.raises(DomainError):
        Partition.parse("1 x")
    with pytest.raises(DomainError):
        Partition(())


def test_partition_properties():
    pi = Partition.parse("1^2 4")
    assert pi.weight == 6
    assert pi.parts_count == 3
    assert pi.unit_count == 2
    assert pi.has_units
    assert pi.core == Partition.of(4)
    assert Partition.parse("1^3").core is None
    assert Partition.of(4).with_units(2) == pi
    assert join_all(iter([Partition.of(2), Partition.of(1, 3)])) == Partition.of(1, 2, 3)
    assert join_all(iter([])) is None


def test_canonical_order_of_four():
    order = enumerate_partitions(4)
    assert order.labels() == ["4", "1 3", "2^2", "1^2 2", "1^4"]
    assert order.minus() == [Partition.of(4), Partition.of(2, 2)]
    assert order.plus() == [Partition.of(1, 3), Partition.of(1, 1, 2), Partition.of(1, 1, 1, 1)]
    assert order.index(Partition.of(2, 2)) == 2


def test_partition_counts():
    assert [len(enumerate_partitions(r)) for r in range(1, 7)] == [1, 2, 3, 5, 7, 11]
    with pytest.raises(DomainError):
        enumerate_partitions(0)


def test_partition_function_values():
    assert partition_function(Partition.of(1, 2)) == 3
    assert partition_function(Partition.of(1, 1, 2, 2)) == 45
    assert partition_function(Partition.of(2, 2)) == 3
    assert partition_function(Partition.parse("1^4")) == 1


def test_partition_function_sums_to_bell():
    for r in range(1, 7):
        assert sum(partition_function(pi) for pi in enumerate_partitions(r)) == bell_number(r)


def test_bell_numbers():
    assert [bell_number(r) for r in range(7)] == [1, 1, 2, 5, 15, 52, 203]
    assert len(enumerate_set_partitions(3)) == 5
    assert len(enumerate_set_partitions(4)) == 15
    assert len(enumerate_set_partitions(6)) == 203


def test_set_partition_shape_and_validation():
    sigma = SetPartition(((3, 1), (2,)))
    assert sigma.blocks == ((1, 3), (2,))
    assert sigma.shape() == Partition.of(1, 2)
    with pytest.raises(DomainError):
        SetPartition(((1,), (3,)))


def test_stirling_numbers():
    assert [stirling2(4, k) for k in range(5)] == [0, 1, 7, 6, 1]
    assert [stirling1(4, k) for k in range(5)] == [0, -6, 11, -6, 1]
    assert stirling2(3, 5) == 0
