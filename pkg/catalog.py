#!/usr/bin/env python3
"""
Fixture comparison and errata adjudication

Every published value in data/ is compared with what the engine derives.
Disagreements are expected only where data/known_errata.json ledgers
them; adjudicate_errata() re-derives each ledgered claim and asks the
oracle which side is unbiased.
"""
import logging
import re
from typing import Any, Dict, Iterable, List, Optional

from sympy import Symbol

from carver import carver_lambda, expand_power_product, get_design
from data_manager import DataManager, get_data_manager
from estimators import Target, dstar
from exceptions import EngineError
from matrices import build_A, build_C, get_inverse
from oracle import verify_expectation_row, verify_unbiased
from partitions import Partition
from qfield import N, ZERO, const, limit_n_inf, n, parse, render

logger = logging.getLogger(__name__)

ORACLE_POPULATION = (0, 1, 3, 4, 7, 8, 12, 2, 5)
ORACLE_SAMPLE_SIZE = 7
ORACLE_IID_POPULATION = ORACLE_POPULATION[:5]

MATRIX_FIXTURES = {
    'sampling_matrix_finite': (False, False),
    'sampling_matrix_infinite': (True, False),
    'inverse_matrix_infinite': (True, True),
}
RECORD_FIXTURES = ('polykay_catalog', 'joint_moment_catalog', 'joint_cumulant_catalog')
_FAMILY = re.compile(r'^1\^i\s*')


def _comparison(fixture: str, locator: Dict[str, Any], published: str, derived: str, match: bool,
                ledger: List[Dict[str, Any]]) -> Dict[str, Any]:
    record = {'fixture': fixture, 'locator': locator, 'published': published, 'derived': derived, 'match': match}
    record['ledgered'] = [e['id'] for e in ledger if ledger_matches(e, fixture, locator, published)]
    return record


def ledger_matches(entry: Dict[str, Any], fixture: str, locator: Dict[str, Any], published: str) -> bool:
    """Whether a ledger entry covers one compared value."""
    if entry.get('fixture') != fixture:
        return False
    for key, wanted in entry.get('locator', {}).items():
        if key == 'population':
            if wanted != 'any' and locator.get('population') != wanted:
                return False
        elif key == 'targets':
            if locator.get('target') not in wanted:
                return False
        elif key == 'columns':
            if locator.get('col') not in wanted:
                return False
        elif key == 'zero_claims':
            if published.strip() != '0':
                return False
        elif locator.get(key) != wanted:
            return False
    return True


def _lambda_comparisons(manager: DataManager, ledger) -> List[Dict[str, Any]]:
    found = []
    for pattern in manager.load_fixture('lambda_catalog')['patterns']:
        text = pattern['partition']
        family = bool(_FAMILY.match(text))
        core = _FAMILY.sub('', text)
        for i in (range(3) if family else range(1)):
            pi = Partition.parse(core).with_units(i)
            derived = list(carver_lambda(pi).coefficients)
            locator = {'partition': text, 'i': i}
            found.append(_comparison('lambda_catalog', locator, str(pattern['coefficients']), str(derived),
                                     derived == pattern['coefficients'], ledger))
    return found


def _matrix_comparisons(manager: DataManager, name: str, ledger) -> List[Dict[str, Any]]:
    infinite, inverse = MATRIX_FIXTURES[name]
    matrices = {}
    found = []
    for entry in manager.load_fixture(name)['entries']:
        row, col = Partition.parse(entry['row']), Partition.parse(entry['col'])
        r = row.weight
        if r not in matrices:
            matrices[r] = get_inverse('C', r, infinite=infinite) if inverse else build_C(r, infinite=infinite)
        derived = matrices[r].entry(row, col)
        locator = {'row': entry['row'], 'col': entry['col']}
        found.append(_comparison(name, locator, entry['value'], render(derived),
                                 parse(entry['value']) == derived, ledger))
    return found


def _record_comparisons(manager: DataManager, name: str, ledger) -> List[Dict[str, Any]]:
    found = []
    for record in manager.load_fixture(name)['records']:
        target = Target.parse(record['target'])
        infinite = record['population'] == 'infinite'
        if record['kind'] == 'estimator':
            values = dstar(target, infinite).entries
        else:
            values = target.expansion(get_design(infinite=infinite))
        for col, published in record['entries'].items():
            derived = values.get(Partition.parse(col), ZERO)
            locator = {'target': record['target'], 'population': record['population'],
                       'kind': record['kind'], 'col': col}
            found.append(_comparison(name, locator, published, render(derived), parse(published) == derived, ledger))
    return found


def check_fixtures(names: Optional[Iterable[str]] = None,
                   manager: Optional[DataManager] = None) -> List[Dict[str, Any]]:
    """Compare published fixture values with the derived engine."""
    manager = manager or get_data_manager()
    ledger = manager.load_errata()
    names = list(names) if names else ['lambda_catalog', *MATRIX_FIXTURES, *RECORD_FIXTURES]
    found: List[Dict[str, Any]] = []
    for name in names:
        if name == 'lambda_catalog':
            found.extend(_lambda_comparisons(manager, ledger))
        elif name in MATRIX_FIXTURES:
            found.extend(_matrix_comparisons(manager, name, ledger))
        elif name in RECORD_FIXTURES:
            found.extend(_record_comparisons(manager, name, ledger))
        else:
            raise EngineError(f"unknown fixture {name!r}")
        logger.info(f" [VERIFY] fixture {name} compared")

    unexplained = [c for c in found if not c['match'] and not c['ledgered']]
    for c in unexplained:
        logger.warning(f" [VERIFY] unexplained mismatch in {c['fixture']} at {c['locator']}")
    return found


def _claim(check: bool, detail: str) -> Dict[str, Any]:
    return {'still_differs': check, 'detail': detail}


def _standalone_claims() -> Dict[str, Any]:
    """Ledger claims that no fixture carries, re-derived here."""
    a, b = Symbol('a'), Symbol('b')

    def five_factor():
        counts = expand_power_product(['a', 'b', 'c', 'd', 'f']).multiplicity_by_shape()
        return _claim(counts[Partition.of(1, 4)] != 3, f"lambda(1 4) multiplicity {counts[Partition.of(1, 4)]}")

    def aab():
        single = [t for t in expand_power_product([a, a, b]).terms if t.shape == Partition.of(3)][0]
        return _claim(Symbol('c') not in single.sums[0].free_symbols, f"single-block sum {single.sums[0]}")

    def a5b():
        single = [t for t in expand_power_product([a] * 5 + [b]).terms if t.shape == Partition.of(6)][0]
        return _claim(len(single.sums) == 1, f"single-block sums {single.sums}")

    def a5_last_row():
        design = get_design()
        row = build_A(5).row(Partition((1,) * 5))
        expected = {
            Partition((1,) * 5): design.lam(Partition((1,) * 5)),
            Partition((1, 1, 1, 2)): design.lam(Partition((1, 1, 1, 2))) * 10,
            Partition((1, 2, 2)): design.lam(Partition((1, 2, 2))) * 15,
        }
        agrees = all(row.get(k) == v for k, v in expected.items())
        return _claim(agrees, "row (1^5) carries lambda(1^5), 10 lambda(1^3 2), 15 lambda(1 2^2)")

    def a6_diagonal():
        pi = Partition((1, 1, 4))
        diagonal = build_A(6).entry(pi, pi)
        return _claim(diagonal == get_design().lam(Partition((1, 1, 1))), f"diagonal {render(diagonal)}")

    def limit_12_3():
        value = limit_n_inf(build_C(3).entry(Partition.of(1, 2), Partition.of(3)))
        return _claim(value == -N / ((N - 1) * (N - 2)), f"limit {render(value)}")

    def lifting():
        ratio = build_C(5).entry(Partition((1,) * 5), Partition((1, 2, 2))) / \
            build_C(4).entry(Partition((1,) * 4), Partition((2, 2)))
        return _claim(ratio == const(5), f"ratio {render(ratio)}")

    def sixth_power():
        value = build_C(6).entry(Partition((1,) * 6), Partition((3, 3)))
        expected = get_design().lam(Partition((3, 3))) * N ** 2 * 10 / n ** 6
        return _claim(value == expected, f"C[1^6, 3^2] = {render(value)}")

    return {
        'power-sum-five-factor': five_factor,
        'expectation-aab': aab,
        'expectation-a5b': a5b,
        'matrix-a5-last-row': a5_last_row,
        'matrix-a6-1^2 4-diagonal': a6_diagonal,
        'limit-1 2|3-n-infinite': limit_12_3,
        'lifting-1^5|1 2^2': lifting,
        'mean-sixth-power-3^2': sixth_power,
    }


# Expectation rows whose enumeration decides each standalone claim
STANDALONE_ORACLE_ROWS = {
    'power-sum-five-factor': ('B', '1^5'),
    'expectation-aab': ('A', '1^2 2'),
    'expectation-a5b': ('A', '1^6'),
    'matrix-a5-last-row': ('A', '1^5'),
    'matrix-a6-1^2 4-diagonal': ('A', '1^2 4'),
    'limit-1 2|3-n-infinite': ('C', '1 2'),
    'lifting-1^5|1 2^2': ('C', '1^5'),
    'mean-sixth-power-3^2': ('C', '1^6'),
}


def _oracle_for_comparison(comparison: Dict[str, Any]) -> bool:
    """Enumerate the derived side of one ledgered comparison."""
    locator = comparison['locator']
    if 'target' in locator:
        if locator.get('population') == 'infinite':
            return verify_unbiased(locator['target'], ORACLE_IID_POPULATION, ORACLE_SAMPLE_SIZE, infinite=True).ok
        return verify_unbiased(locator['target'], ORACLE_POPULATION, ORACLE_SAMPLE_SIZE).ok
    if 'row' in locator:
        row = Partition.parse(locator['row'])
        if comparison['fixture'] == 'inverse_matrix_infinite':
            # row pi of C^-1 is the estimator of mu(pi)
            return verify_unbiased(f"mu({row})", ORACLE_IID_POPULATION, ORACLE_SAMPLE_SIZE, infinite=True).ok
        if comparison['fixture'] == 'sampling_matrix_infinite':
            return verify_expectation_row('C', row.weight, row, ORACLE_IID_POPULATION, ORACLE_SAMPLE_SIZE,
                                          infinite=True).ok
        return verify_expectation_row('C', row.weight, row, ORACLE_POPULATION, ORACLE_SAMPLE_SIZE).ok
    pi = Partition.parse(_FAMILY.sub('', locator['partition'])).with_units(locator.get('i', 0))
    return verify_expectation_row('B', pi.weight, Partition((1,) * pi.weight), ORACLE_POPULATION,
                                  ORACLE_SAMPLE_SIZE).ok


def _oracle_verdict(entry: Dict[str, Any], comparisons: List[Dict[str, Any]]) -> Optional[bool]:
    """None when nothing could be enumerated for the entry."""
    if entry.get('fixture'):
        if not comparisons:
            return None
        return _oracle_for_comparison(comparisons[0])
    if entry['id'] not in STANDALONE_ORACLE_ROWS:
        return None
    family, row = STANDALONE_ORACLE_ROWS[entry['id']]
    pi = Partition.parse(row)
    return verify_expectation_row(family, pi.weight, pi, ORACLE_POPULATION, ORACLE_SAMPLE_SIZE).ok


def _verdict(still_differs: bool, oracle: Optional[bool]) -> str:
    if oracle is None:
        return 'unverified'
    return 'derived' if still_differs and oracle else 'unresolved'


def adjudicate_errata(manager: Optional[DataManager] = None) -> List[Dict[str, Any]]:
    """One verdict per ledger entry: 'derived', 'unresolved' or 'unverified'."""
    manager = manager or get_data_manager()
    ledger = manager.load_errata()
    fixtures = sorted({e['fixture'] for e in ledger if e.get('fixture')})
    comparisons = check_fixtures(fixtures, manager)
    standalone = _standalone_claims()

    verdicts = []
    for entry in ledger:
        if entry.get('fixture'):
            covered = [c for c in comparisons if entry['id'] in c['ledgered']]
            differing = [c for c in covered if not c['match']]
            result = {
                'id': entry['id'],
                'fixture': entry['fixture'],
                'covered': len(covered),
                'still_differs': bool(differing),
                'oracle_confirms_derived': _oracle_verdict(entry, differing or covered),
            }
        else:
            check = standalone.get(entry['id'])
            claim = check() if check else {'still_differs': False, 'detail': 'no check registered'}
            result = {'id': entry['id'], 'fixture': None, 'covered': 0,
                      'still_differs': claim['still_differs'], 'detail': claim['detail'],
                      'oracle_confirms_derived': _oracle_verdict(entry, [])}
        result['verdict'] = _verdict(result['still_differs'], result['oracle_confirms_derived'])
        logger.info(f" [ERRATA] {result['id']}: {result['verdict']}")
        verdicts.append(result)
    return verdicts


def summarise(comparisons: List[Dict[str, Any]]) -> Dict[str, int]:
    return {
        'compared': len(comparisons),
        'matching': sum(1 for c in comparisons if c['match']),
        'ledgered': sum(1 for c in comparisons if not c['match'] and c['ledgered']),
        'unexplained': sum(1 for c in comparisons if not c['match'] and not c['ledgered']),
    }
