#!/usr/bin/env python3
"""
Command-line entry point for the sampling-moments engine

Every command handler returns a result dict {"success", "error", "data"};
run() prints the data and maps the outcome to an exit code:
0 success, 1 verification failure, 2 usage or domain error.
"""
import argparse
import logging
import sys
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from sympy import Rational

from carver import carver_lambda
from catalog import ORACLE_POPULATION, adjudicate_errata, check_fixtures, summarise
from config import Config
from data_manager import get_data_manager
from estimators import Target, dstar, polykay, to_exact, ue
from exceptions import EngineError, PoleError
from matrices import FAMILIES, LIMITS, eigenvalue_check, get_inverse, get_matrix, verify_inversion_principle
from oracle import verify_expectation_row, verify_unbiased
from partitions import Partition, bell_number, enumerate_partitions, partition_function
from qfield import evaluate
from symfun import eigen_check, invariance_check, proof_pipeline_check

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2

SUITES = ('inversion', 'lambda', 'fixtures', 'oracle', 'eigen', 'symfun', 'all')
ORACLE_TARGETS = ('mu(2)', 'mu(3)', 'mu(2 2)', 'k(4)', 'k(2 2)', 'jmu(1^2)*jmu(1^2)', 'jk(1^4)', 'm(1 2)',
                  'k(5)', 'mu(3^2)', 'jmu(1 5)', 'k(4)*k(2)', 'k(6)')


def setup_logging(level: Optional[str] = None):
    """Configure logging once for the process"""
    logging.basicConfig(
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        level=getattr(logging, (level or Config.LOG_LEVEL).upper(), logging.WARNING),
        handlers=[
            logging.StreamHandler(sys.stderr),
            logging.FileHandler(Config.LOG_FILE, encoding='utf-8', mode='a')
        ],
        force=True
    )


def _ok(data: str) -> Dict[str, Any]:
    return {"success": True, "error": None, "data": data}


def _failed(data: str, error: str = "verification failed") -> Dict[str, Any]:
    return {"success": False, "error": error, "data": data}


def parse_at(text: Optional[str]) -> Optional[Tuple[Fraction, Optional[Fraction]]]:
    """'n=5,N=9' or 'n=5' (N omitted or 'inf' means an infinite population)"""
    if not text:
        return None
    values: Dict[str, Optional[Fraction]] = {}
    for item in text.split(','):
        key, sep, value = item.partition('=')
        key, value = key.strip(), value.strip()
        if not sep or key not in ('n', 'N'):
            raise EngineError(f"cannot read --at item {item!r}; expected n=.. or N=..")
        values[key] = None if value in ('inf', 'oo') else to_exact(value)
    if values.get('n') is None:
        raise EngineError("--at needs a finite sample size n")
    return values['n'], values.get('N')


def _at_field(at) -> Optional[Dict[str, Optional[str]]]:
    if at is None:
        return None
    return {'n': str(at[0]), 'N': None if at[1] is None else str(at[1])}


def _emit(payload: Dict[str, Any], fmt: str) -> str:
    if fmt == 'text':
        return '\n'.join(f"{e['row']}\t{e['col']}\t{e['value']}" for e in payload['entries'])
    return get_data_manager().emit_table(payload, fmt).rstrip('\n')


def _matrix_payload(matrix, at) -> Dict[str, Any]:
    payload = {
        'kind': 'matrix',
        'family': matrix.family,
        'r': matrix.r,
        'orientation': matrix.orientation,
        'population': matrix.population,
        'entries': matrix.to_records(*(at or ())),
    }
    if at is not None:
        payload['at'] = _at_field(at)
    return payload


def _show_number(value: Fraction, digits: Optional[int]) -> str:
    if digits is None:
        return str(value)
    return str(Rational(value.numerator, value.denominator).evalf(digits))


# Command handlers

def cmd_partitions(args) -> Dict[str, Any]:
    order = enumerate_partitions(args.r)
    payload = {
        'kind': 'partitions',
        'r': args.r,
        'entries': [{'row': str(pi), 'col': 'P', 'value': str(partition_function(pi))} for pi in order],
    }
    text = _emit(payload, args.emit)
    if args.emit == 'text':
        text += f"\n# {len(order)} partitions, {bell_number(args.r)} set partitions"
    return _ok(text)


def cmd_lambda(args) -> Dict[str, Any]:
    expansion = carver_lambda(Partition.parse(args.pi))
    at = parse_at(args.at)
    if at is None:
        return _ok(expansion.render())
    return _ok(str(evaluate(expansion.as_ratfunc(), *at)))


def _matrix_for(args, inverse: bool = False):
    if inverse:
        matrix = get_inverse(args.family, args.r, args.orientation, args.infinite)
    else:
        matrix = get_matrix(args.family, args.r, args.orientation, args.infinite)
    limit = getattr(args, 'limit', None)
    return matrix.limit(limit) if limit else matrix


def cmd_matrix(args) -> Dict[str, Any]:
    return _ok(_emit(_matrix_payload(_matrix_for(args), parse_at(args.at)), args.emit))


def cmd_invert(args) -> Dict[str, Any]:
    return _ok(_emit(_matrix_payload(_matrix_for(args, inverse=True), parse_at(args.at)), args.emit))


def cmd_limit(args) -> Dict[str, Any]:
    matrix = get_matrix(args.family, args.r, args.orientation).limit(args.which)
    return _ok(_emit(_matrix_payload(matrix, parse_at(args.at)), args.emit))


def cmd_estimate(args) -> Dict[str, Any]:
    if args.population_size is None and not args.infinite:
        raise EngineError("estimate needs --population-size N or --infinite")
    dataset = get_data_manager().read_dataset_csv(args.data, None if args.infinite else args.population_size)
    try:
        value = ue(args.target, dataset)
    except PoleError as e:
        raise EngineError(str(e))
    return _ok(_show_number(value, args.float))


def cmd_polykay(args) -> Dict[str, Any]:
    vector = polykay(args.pi, args.infinite)
    lines = [
        f"{vector.label}({vector.partition}) = {vector.constant_list()}",
        f"k({vector.partition}) = {vector.constants.render('mu')}",
        f"ue = {vector.row.render()}",
    ]
    return _ok('\n'.join(lines))


def cmd_dstar(args) -> Dict[str, Any]:
    target = Target.parse(args.target)
    vector = dstar(target, args.infinite, args.orientation)
    at = parse_at(args.at)
    if args.emit == 'text' and at is None:
        return _ok(vector.render())

    if at is None:
        records = vector.to_records()
    else:
        values = vector.evaluate(*at)
        records = [{'col': str(k), 'value': str(v)} for k, v in sorted(values.items(), key=lambda kv: kv[0].sort_key())]
    payload = {
        'kind': 'estimator',
        'target': str(target),
        'r': target.order,
        'orientation': args.orientation,
        'population': vector.population,
        'entries': [{'row': str(target), **record} for record in records],
    }
    if at is not None:
        payload['at'] = _at_field(at)
    return _ok(_emit(payload, args.emit))


# Verification suites

def _suite_inversion(r: int, jobs: int) -> List[str]:
    failures = []
    for order in range(1, r + 1):
        for family in ('B', 'C', 'D'):
            report = verify_inversion_principle(order, family)
            if not report['success']:
                failures.append(f"inversion {family}_{order}: {report['residuals'][:3]}")
    return failures


def _unexplained(names: Optional[List[str]]) -> List[str]:
    comparisons = check_fixtures(names)
    counts = summarise(comparisons)
    logger.info(f" [VERIFY] fixtures: {counts}")
    return [f"{c['fixture']} {c['locator']}: published {c['published']}, derived {c['derived']}"
            for c in comparisons if not c['match'] and not c['ledgered']]


def _suite_lambda(r: int, jobs: int) -> List[str]:
    failures = _unexplained(['lambda_catalog'])
    for order in range(1, r + 1):
        for pi in enumerate_partitions(order):
            # a full census keeps only the all-units pattern
            value = evaluate(carver_lambda(pi).as_ratfunc(), order + 2, order + 2)
            expected = 1 if pi.core is None else 0
            if value != expected:
                failures.append(f"lambda({pi}) at n = N is {value}, expected {expected}")
    return failures


def _suite_fixtures(r: int, jobs: int) -> List[str]:
    return _unexplained(None)


def _suite_oracle(r: int, jobs: int) -> List[str]:
    population = ORACLE_POPULATION
    # every sample must be large enough to carry an order-r estimator
    size = min(len(population) - 2, max(5, r + 1))
    failures = []
    for target in ORACLE_TARGETS:
        if Target.parse(target).order > r:
            continue
        report = verify_unbiased(target, population, size, jobs)
        if not report.ok:
            failures.append(f"{report.statistic}: {report.expectation} != {report.claimed}")
    for order in range(1, r + 1):
        for family in ('B', 'C', 'D'):
            for pi in enumerate_partitions(order):
                report = verify_expectation_row(family, order, pi, population, size)
                if not report.ok:
                    failures.append(f"{report.statistic}: {report.expectation} != {report.claimed}")
    return failures


def _suite_eigen(r: int, jobs: int) -> List[str]:
    failures = []
    for order in range(1, r + 1):
        failures.extend(eigenvalue_check(order)['failures'])
    for k in range(1, min(r, 3) + 1):
        report = eigen_check(k, ORACLE_POPULATION[:6], 4, jobs=jobs)
        if not report['success']:
            failures.append(f"a_{k}: expected {report['expected']}, found {report['found']}")
    return failures


def _suite_symfun(r: int, jobs: int) -> List[str]:
    failures = []
    for order in range(1, r + 1):
        failures.extend(proof_pipeline_check(order)['failures'])
    for pi in enumerate_partitions(min(r, 5)):
        report = invariance_check(pi, ORACLE_POPULATION[:7], 5)
        if not report['success']:
            failures.append(f"<{pi}> is not preserved: {report['expected']} != {report['found']}")
    return failures


SUITE_RUNNERS = {
    'inversion': _suite_inversion,
    'lambda': _suite_lambda,
    'fixtures': _suite_fixtures,
    'oracle': _suite_oracle,
    'eigen': _suite_eigen,
    'symfun': _suite_symfun,
}


def cmd_verify(args) -> Dict[str, Any]:
    suites = list(SUITE_RUNNERS) if args.suite == 'all' else [args.suite]
    lines, failed = [], False
    for suite in suites:
        failures = SUITE_RUNNERS[suite](args.r, args.jobs)
        failed = failed or bool(failures)
        lines.append(f"{suite}: {'ok' if not failures else 'FAILED'}")
        lines.extend(f"  {f}" for f in failures)
    text = '\n'.join(lines)
    return _failed(text) if failed else _ok(text)


def cmd_errata(args) -> Dict[str, Any]:
    verdicts = adjudicate_errata()
    lines = []
    for v in verdicts:
        oracle = {True: 'oracle-confirms', False: 'oracle-rejects', None: 'unverified'}[v['oracle_confirms_derived']]
        lines.append(f"{v['id']}\t{v['verdict']}\t{oracle}")
    text = '\n'.join(lines)
    if any(v['oracle_confirms_derived'] is False for v in verdicts):
        return _failed(text)
    return _ok(text)


def _add_matrix_options(parser: argparse.ArgumentParser, family: bool = True):
    if family:
        parser.add_argument('family', choices=FAMILIES)
    parser.add_argument('--r', type=int, required=True)
    parser.add_argument('--orientation', choices=('N,n', 'n,N'), default='N,n')
    parser.add_argument('--emit', choices=('text', 'json', 'tsv'), default='tsv')
    parser.add_argument('--at', help="evaluate entries, e.g. n=5,N=9")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='sampling-moments',
                                     description="Exact unbiased estimators of moment and cumulant products")
    parser.add_argument('--jobs', type=int, default=Config.JOBS)
    parser.add_argument('--log-level', default=None)
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('partitions', help="list partitions of r in canonical order")
    p.add_argument('--r', type=int, required=True)
    p.add_argument('--emit', choices=('text', 'json', 'tsv'), default='text')
    p.set_defaults(handler=cmd_partitions)

    p = sub.add_parser('lambda', help="lambda(pi) in the e_j basis")
    p.add_argument('--pi', required=True)
    p.add_argument('--at')
    p.set_defaults(handler=cmd_lambda)

    p = sub.add_parser('matrix', help="sampling matrix of a family")
    _add_matrix_options(p)
    p.add_argument('--infinite', action='store_true')
    p.add_argument('--limit', choices=sorted(LIMITS))
    p.set_defaults(handler=cmd_matrix)

    p = sub.add_parser('invert', help="exact inverse of a family matrix")
    _add_matrix_options(p)
    p.add_argument('--infinite', action='store_true')
    p.add_argument('--limit', choices=sorted(LIMITS))
    p.set_defaults(handler=cmd_invert)

    p = sub.add_parser('limit', help="entrywise limit of a finite-population matrix")
    _add_matrix_options(p)
    p.add_argument('which', choices=sorted(LIMITS))
    p.set_defaults(handler=cmd_limit)

    p = sub.add_parser('estimate', help="unbiased estimate of a target from a CSV sample")
    p.add_argument('--target', required=True)
    p.add_argument('--data', required=True)
    size = p.add_mutually_exclusive_group()
    size.add_argument('--population-size', type=int)
    size.add_argument('--infinite', action='store_true')
    p.add_argument('--float', type=int, nargs='?', const=Config.FLOAT_DIGITS, default=None)
    p.set_defaults(handler=cmd_estimate)

    p = sub.add_parser('polykay', help="polykay constants and estimator row")
    p.add_argument('--pi', required=True)
    p.add_argument('--infinite', action='store_true')
    p.set_defaults(handler=cmd_polykay)

    p = sub.add_parser('dstar', help="estimator coefficients of a target")
    p.add_argument('--target', required=True)
    p.add_argument('--infinite', action='store_true')
    p.add_argument('--orientation', choices=('N,n', 'n,N'), default='N,n')
    p.add_argument('--emit', choices=('text', 'json', 'tsv'), default='text')
    p.add_argument('--at')
    p.set_defaults(handler=cmd_dstar)

    p = sub.add_parser('verify', help="run a verification suite")
    p.add_argument('--suite', choices=SUITES, default='all')
    p.add_argument('--r', type=int, default=Config.MAX_ORDER)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser('errata', help="adjudicate the errata ledger")
    p.set_defaults(handler=cmd_errata)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    setup_logging(args.log_level)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_USAGE

    try:
        Config.validate_config()
        result = args.handler(args)
    except EngineError as e:
        logger.error(f" [CLI] {args.command}: {str(e)}")
        print(f"error: {str(e)}", file=sys.stderr)
        return EXIT_USAGE

    if result["data"]:
        print(result["data"])
    if not result["success"]:
        print(f"error: {result['error']}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
