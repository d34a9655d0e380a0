#!/usr/bin/env python3
"""
Tests for data loading, CSV ingestion and table emission
"""
import json
import os
from fractions import Fraction

import pytest

from data_manager import DataManager, get_data_manager
from exceptions import DomainError
from matrices import build_C, from_records
from qfield import parse


def test_fixtures_and_ledger_load():
    manager = get_data_manager()
    assert manager.load_fixture('lambda_catalog')['patterns']
    assert any(e['id'] == 'lambda-1i2' for e in manager.load_errata())
    with pytest.raises(DomainError):
        manager.load_fixture('nonexistent')


def test_dataset_csv(tmp_path):
    path = tmp_path / "sample.csv"
    path.write_text("# observed values\n0\n1\n\n1/3\n0.5  # decimal\n", encoding='utf-8')
    dataset = get_data_manager().read_dataset_csv(str(path), population_size=10)
    assert dataset.values == (0, 1, Fraction(1, 3), Fraction(1, 2))
    assert dataset.population_size == 10


def test_dataset_csv_errors(tmp_path):
    manager = get_data_manager()
    missing = manager.load_dataset(str(tmp_path / "missing.csv"))
    assert not missing["success"]
    bad = tmp_path / "bad.csv"
    bad.write_text("1\nabc\n", encoding='utf-8')
    with pytest.raises(DomainError):
        manager.read_dataset_csv(str(bad))


def test_kernel_csv(tmp_path):
    path = tmp_path / "kernel.csv"
    path.write_text("x,y,value\n0,1,2\n0,0,1\n1,1,5\n", encoding='utf-8')
    kernel = get_data_manager().read_kernel_csv(str(path))
    assert kernel.arity == 2
    assert kernel(0, 1) == 2
    with pytest.raises(DomainError):
        kernel(1, 0)
    symmetric = get_data_manager().read_kernel_csv(str(path), symmetric=True)
    assert symmetric(1, 0) == 2
    assert symmetric(1, 1) == 5


def test_json_table_is_validated():
    manager = get_data_manager()
    payload = {'kind': 'matrix', 'family': 'C', 'r': 2, 'entries': build_C(2).to_records()}
    text = manager.emit_table(payload, 'json')
    assert manager.parse_table(text, 'json') == payload
    with pytest.raises(DomainError):
        manager.emit_table({'kind': 'matrix', 'r': 0, 'entries': []}, 'json')
    with pytest.raises(DomainError):
        manager.emit_table(payload, 'xml')


def test_tsv_table_rebuilds_the_matrix():
    manager = get_data_manager()
    C = build_C(3)
    text = manager.emit_table({'kind': 'matrix', 'r': 3, 'entries': C.to_records()}, 'tsv')
    assert text.splitlines()[0] == "row\tcol\tvalue"
    records = manager.parse_table(text, 'tsv')['entries']
    assert from_records('C', 3, records, parse) == C


def test_save_json_backs_up(tmp_path):
    manager = DataManager(str(tmp_path))
    assert manager.save_json('out.json', {'a': 1})["success"]
    assert manager.save_json('out.json', {'a': 2})["success"]
    assert manager.load_json('out.json') == {'a': 2}
    backups = os.listdir(manager.backup_dir)
    assert len(backups) == 1
    with open(os.path.join(manager.backup_dir, backups[0]), encoding='utf-8') as f:
        assert json.load(f) == {'a': 1}
