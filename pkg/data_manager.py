#!/usr/bin/env python3
"""
Data Manager for the sampling-moments engine

Loads the golden fixtures and the errata ledger, ingests datasets and
kernel tables from CSV, and emits or parses matrix tables as JSON or TSV.
"""

import io
import json
import logging
import os
import threading
from datetime import datetime
from typing import Any, Dict, List, Optional

import jsonschema
import pandas as pd

from config import Config
from estimators import Dataset, to_exact
from exceptions import DomainError, EngineError
from symfun import KernelStat

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ['row', 'col', 'value']


class DataManager:
    def __init__(self, data_dir: Optional[str] = None):
        self.data_dir = data_dir or Config.DATA_DIR
        self.backup_dir = os.path.join(self.data_dir, 'backups')
        self._lock = threading.RLock()
        self._cache: Dict[str, Any] = {}

    def backup_file(self, filename: str) -> bool:
        """Create a backup of a file before modifying it"""
        filepath = os.path.join(self.data_dir, filename)
        if os.path.exists(filepath):
            if not os.path.exists(self.backup_dir):
                os.makedirs(self.backup_dir)
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            backup_name = f"{filename.replace('.', '_')}_{timestamp}.backup"
            backup_path = os.path.join(self.backup_dir, backup_name)

            with open(filepath, 'r', encoding='utf-8') as src:
                with open(backup_path, 'w', encoding='utf-8') as dst:
                    dst.write(src.read())

            logger.info(f" [DATA] Backup created: {backup_name}")
            return True
        return False

    def load_json(self, filename: str) -> Dict[str, Any]:
        """Read a JSON file from the data directory, cached"""
        with self._lock:
            if filename not in self._cache:
                filepath = os.path.join(self.data_dir, filename)
                if not os.path.exists(filepath):
                    raise DomainError(f"data file not found: {filepath}")
                with open(filepath, 'r', encoding='utf-8') as f:
                    self._cache[filename] = json.load(f)
                logger.debug(f" [DATA] Loaded {filename}")
            return self._cache[filename]

    def load_fixture(self, name: str) -> Dict[str, Any]:
        if name not in Config.FIXTURE_FILES:
            raise DomainError(f"unknown fixture {name!r}; expected one of {sorted(Config.FIXTURE_FILES)}")
        return self.load_json(Config.FIXTURE_FILES[name])

    def load_errata(self) -> List[Dict[str, Any]]:
        return self.load_json(Config.ERRATA_FILE).get('entries', [])

    def save_json(self, filename: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        """Write a JSON file into the data directory, backing up what it replaces"""
        try:
            if not os.path.exists(self.data_dir):
                os.makedirs(self.data_dir)
            self.backup_file(filename)
            filepath = os.path.join(self.data_dir, filename)
            with open(filepath, 'w', encoding='utf-8') as f:
                json.dump(payload, f, indent=2, ensure_ascii=False)
                f.write('\n')
            with self._lock:
                self._cache.pop(filename, None)
            logger.info(f" [DATA] Saved {filename}")
            return {"success": True, "error": None, "data": filepath}
        except OSError as e:
            logger.error(f" [DATA] Could not save {filename}: {str(e)}")
            return {"success": False, "error": str(e), "data": None}

    def _read_csv(self, path: str) -> pd.DataFrame:
        if not os.path.exists(path):
            raise DomainError(f"CSV file not found: {path}")
        df = pd.read_csv(path, header=None, comment='#', dtype=str, skip_blank_lines=True,
                         skipinitialspace=True)
        return df.dropna(how='all')

    def read_dataset_csv(self, path: str, population_size: Optional[int] = None,
                         role: str = 'sample') -> Dataset:
        """
        One value per line; '#' starts a comment; values are integers,
        p/q fractions or decimals.
        """
        df = self._read_csv(path)
        if df.empty:
            raise DomainError(f"no values in {path}")
        values = []
        for raw in df.iloc[:, 0].tolist():
            try:
                values.append(to_exact(str(raw)))
            except (ValueError, ZeroDivisionError) as e:
                raise DomainError(f"cannot read value {raw!r} in {path}: {str(e)}")
        logger.info(f" [DATA] Read {len(values)} values from {path}")
        if role == 'population':
            return Dataset.population(values)
        return Dataset.sample(values, population_size)

    def load_dataset(self, path: str, population_size: Optional[int] = None,
                     role: str = 'sample') -> Dict[str, Any]:
        """read_dataset_csv wrapped in a result dict"""
        try:
            return {"success": True, "error": None,
                    "data": self.read_dataset_csv(path, population_size, role)}
        except EngineError as e:
            logger.error(f" [DATA] {str(e)}")
            return {"success": False, "error": str(e), "data": None}

    def read_kernel_csv(self, path: str, symmetric: bool = False) -> KernelStat:
        """Rows (x, value), (x, y, value) or (x, y, z, value); a header row is skipped.

        With symmetric=True each row also stands for every permutation of its arguments.
        """
        df = self._read_csv(path)
        arity = df.shape[1] - 1
        if arity < 1 or arity > 3:
            raise DomainError(f"kernel table needs 2 to 4 columns, got {df.shape[1]}")
        table = {}
        for position, row in enumerate(df.itertuples(index=False)):
            try:
                cells = [to_exact(str(c)) for c in row]
            except (ValueError, ZeroDivisionError):
                if position == 0:
                    continue
                raise DomainError(f"cannot read kernel row {list(row)} in {path}")
            table[tuple(cells[:-1])] = cells[-1]
        logger.info(f" [DATA] Read kernel of arity {arity} with {len(table)} entries from {path}")
        return KernelStat(arity, table, symmetric=symmetric)

    def table_schema(self) -> Dict[str, Any]:
        return self.load_json(Config.TABLE_SCHEMA_FILE)

    def validate_table_payload(self, payload: Dict[str, Any]) -> Dict[str, Any]:
        try:
            jsonschema.validate(instance=payload, schema=self.table_schema())
            return {"success": True, "error": None, "data": payload}
        except jsonschema.ValidationError as e:
            logger.error(f" [DATA] Table payload rejected: {e.message}")
            return {"success": False, "error": e.message, "data": None}

    def emit_table(self, payload: Dict[str, Any], fmt: str = 'json') -> str:
        """JSON (validated against the table schema) or TSV with row/col/value columns"""
        if fmt == 'json':
            result = self.validate_table_payload(payload)
            if not result["success"]:
                raise DomainError(f"table does not match {Config.TABLE_SCHEMA_FILE}: {result['error']}")
            return json.dumps(payload, indent=2, ensure_ascii=False) + '\n'
        if fmt == 'tsv':
            df = pd.DataFrame(payload['entries'], columns=TABLE_COLUMNS)
            return df.to_csv(sep='\t', index=False, lineterminator='\n')
        raise DomainError(f"unknown table format {fmt!r}; expected json or tsv")

    def parse_table(self, text: str, fmt: str = 'json') -> Dict[str, Any]:
        if fmt == 'json':
            payload = json.loads(text)
            result = self.validate_table_payload(payload)
            if not result["success"]:
                raise DomainError(f"table does not match {Config.TABLE_SCHEMA_FILE}: {result['error']}")
            return payload
        if fmt == 'tsv':
            df = pd.read_csv(io.StringIO(text), sep='\t', dtype=str, keep_default_na=False)
            missing = [c for c in TABLE_COLUMNS if c not in df.columns]
            if missing:
                raise DomainError(f"TSV table lacks columns {missing}")
            return {'entries': df[TABLE_COLUMNS].to_dict('records')}
        raise DomainError(f"unknown table format {fmt!r}; expected json or tsv")


# Global data manager instance
data_manager = DataManager()


def get_data_manager() -> DataManager:
    """Get the global data manager instance"""
    return data_manager
