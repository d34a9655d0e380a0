#!/usr/bin/env python3
"""
Smoke tests for the command-line entry point
"""
import json
import os
import subprocess
import sys

import pytest

import cli
from config import Config

ROOT = os.path.dirname(os.path.abspath(__file__))


def run_cli(tmp_path, *args):
    env = dict(os.environ, SAMPLING_LOG_FILE=str(tmp_path / "cli.log"))
    return subprocess.run([sys.executable, os.path.join(ROOT, 'cli.py'), *args],
                          capture_output=True, text=True, cwd=str(tmp_path), env=env)


@pytest.fixture(autouse=True)
def log_to_tmp(tmp_path, monkeypatch):
    monkeypatch.setattr(cli.Config, 'LOG_FILE', str(tmp_path / "cli.log"))


def test_lambda_command(tmp_path):
    result = run_cli(tmp_path, 'lambda', '--pi', '2^2')
    assert result.returncode == 0, result.stderr
    assert result.stdout.strip() == "e2 - 2*e3 + e4"


def test_estimate_command(tmp_path):
    data = tmp_path / "s.csv"
    data.write_text("0\n1\n", encoding='utf-8')
    result = run_cli(tmp_path, 'estimate', '--target', 'mu(2)', '--data', str(data), '--population-size', '3')
    assert result.returncode == 0, result.stderr
    assert result.stdout.strip() == "1/3"


def test_estimate_options(tmp_path, capsys):
    data = tmp_path / "s.csv"
    data.write_text("0\n1\n", encoding='utf-8')
    assert cli.run(['estimate', '--target', 'mu(2)', '--data', str(data), '--infinite']) == 0
    assert capsys.readouterr().out.strip() == "1/2"
    assert cli.run(['estimate', '--target', 'mu(2)', '--data', str(data), '--population-size', '3',
                    '--float', '4']) == 0
    assert capsys.readouterr().out.strip() == "0.3333"
    assert cli.run(['estimate', '--target', 'mu(2)', '--data', str(data)]) == 2


def test_matrix_limit_tsv(capsys):
    assert cli.run(['matrix', 'C', '--r', '2', '--limit', 'N-inf', '--emit', 'tsv']) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "row\tcol\tvalue"
    assert "2\t2\t(n-1)/n" in lines


def test_matrix_json_at_a_point(capsys):
    assert cli.run(['matrix', 'C', '--r', '2', '--emit', 'json', '--at', 'n=2,N=3']) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload['at'] == {'n': '2', 'N': '3'}
    assert {'row': '2', 'col': '2', 'value': '3/4'} in payload['entries']


def test_invert_and_limit_commands(capsys):
    assert cli.run(['invert', 'C', '--r', '2', '--infinite', '--emit', 'text']) == 0
    assert "2\t2\tn/(n-1)" in capsys.readouterr().out.splitlines()
    assert cli.run(['limit', 'C', 'n-inf', '--r', '2']) == 0
    assert "2\t2\tN/(N-1)" in capsys.readouterr().out.splitlines()


def test_partitions_and_polykay(capsys):
    assert cli.run(['partitions', '--r', '4']) == 0
    out = capsys.readouterr().out
    assert "2^2\tP\t3" in out
    assert "15 set partitions" in out
    assert cli.run(['polykay', '--pi', '4', '--infinite']) == 0
    assert capsys.readouterr().out.splitlines()[0] == "b(4) = [1, -3]"


def test_dstar_json(capsys):
    assert cli.run(['dstar', '--target', 'mu(2)', '--emit', 'json', '--at', 'n=2,N=3']) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload['kind'] == 'estimator'
    assert payload['entries'] == [{'row': 'mu(2)', 'col': '2', 'value': '4/3'}]


def test_verify_inversion(tmp_path):
    result = run_cli(tmp_path, 'verify', '--suite', 'inversion', '--r', '3')
    assert result.returncode == 0, result.stdout + result.stderr
    assert "inversion: ok" in result.stdout


def test_verify_lambda_and_symfun(capsys):
    assert cli.run(['verify', '--suite', 'lambda', '--r', '4']) == 0
    assert cli.run(['verify', '--suite', 'symfun', '--r', '3']) == 0
    assert cli.run(['--jobs', '2', 'verify', '--suite', 'eigen', '--r', '3']) == 0


def test_verify_covers_the_highest_order(capsys):
    assert cli.build_parser().parse_args(['verify']).r == Config.MAX_ORDER
    assert cli.run(['verify', '--suite', 'oracle', '--r', '6']) == 0
    assert "oracle: ok" in capsys.readouterr().out


def test_errata_command(capsys):
    assert cli.run(['errata']) == 0
    out = capsys.readouterr().out
    assert "lambda-1i2\tderived\toracle-confirms" in out
    assert "unverified" not in out


def test_usage_errors(capsys):
    assert cli.run(['lambda']) == 2
    assert cli.run(['matrix', 'C', '--r', '9']) == 2
    assert cli.run(['dstar', '--target', 'nu(2)']) == 2
    assert cli.run(['--jobs', '0', 'partitions', '--r', '2']) == 2
    assert cli.run(['matrix', 'C', '--r', '2', '--at', 'm=3']) == 2


def test_parse_at():
    assert cli.parse_at("n=5,N=9") == (5, 9)
    assert cli.parse_at("n=5,N=inf") == (5, None)
    assert cli.parse_at(None) is None
