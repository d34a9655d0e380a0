#!/usr/bin/env python3
"""
Configuration management for the sampling-moments engine

This module holds every tunable cap and path used by the engine and the CLI.
"""
import os
import logging
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

_ROOT = os.path.dirname(os.path.abspath(__file__))


class Config:
    """Configuration class for the sampling-moments engine"""

    # Orders
    MAX_ORDER = int(os.getenv('SAMPLING_MAX_ORDER', '6'))
    PARTITION_CAP = int(os.getenv('SAMPLING_PARTITION_CAP', '12'))
    SET_PARTITION_CAP = int(os.getenv('SAMPLING_SET_PARTITION_CAP', '8'))
    EXPANSION_CAP = int(os.getenv('SAMPLING_EXPANSION_CAP', '6'))

    # Oracle
    ORACLE_MAX_N = int(os.getenv('SAMPLING_ORACLE_MAX_N', '9'))
    RANDOM_SEED = int(os.getenv('SAMPLING_RANDOM_SEED', '20240607'))

    # Execution
    JOBS = int(os.getenv('SAMPLING_JOBS', '1'))
    FLOAT_DIGITS = int(os.getenv('SAMPLING_FLOAT_DIGITS', '12'))

    # Debug Mode
    DEBUG = os.getenv('DEBUG', 'false').lower() == 'true'
    LOG_LEVEL = os.getenv('SAMPLING_LOG_LEVEL', 'DEBUG' if DEBUG else 'WARNING')

    # Data Paths
    DATA_DIR = os.getenv('SAMPLING_DATA_DIR', os.path.join(_ROOT, 'data'))
    BACKUP_DIR = os.path.join(DATA_DIR, 'backups')
    LOG_FILE = os.getenv('SAMPLING_LOG_FILE', 'sampling_engine.log')
    ERRATA_FILE = 'known_errata.json'
    TABLE_SCHEMA_FILE = 'table_schema.json'

    FIXTURE_FILES = {
        'lambda_catalog': 'lambda_catalog.json',
        'sampling_matrix_finite': 'sampling_matrix_finite.json',
        'sampling_matrix_infinite': 'sampling_matrix_infinite.json',
        'inverse_matrix_infinite': 'inverse_matrix_infinite.json',
        'polykay_catalog': 'polykay_catalog.json',
        'joint_moment_catalog': 'joint_moment_catalog.json',
        'joint_cumulant_catalog': 'joint_cumulant_catalog.json',
    }

    @classmethod
    def validate_config(cls):
        """Validate that the caps are consistent and the data directory exists"""
        if cls.MAX_ORDER < 1 or cls.MAX_ORDER > cls.SET_PARTITION_CAP:
            raise ValueError("SAMPLING_MAX_ORDER must lie between 1 and SAMPLING_SET_PARTITION_CAP")

        if cls.EXPANSION_CAP > cls.SET_PARTITION_CAP:
            raise ValueError("SAMPLING_EXPANSION_CAP cannot exceed SAMPLING_SET_PARTITION_CAP")

        if cls.ORACLE_MAX_N < 1:
            raise ValueError("SAMPLING_ORACLE_MAX_N must be positive")

        if cls.JOBS < 1:
            raise ValueError("SAMPLING_JOBS must be at least 1")

        if not os.path.exists(cls.DATA_DIR):
            os.makedirs(cls.DATA_DIR)
            logger.info(f" [CONFIG] Created data directory: {cls.DATA_DIR}")

        logger.info(" [CONFIG] Configuration validated successfully")
        logger.info(f" [CONFIG] Max order {cls.MAX_ORDER}, oracle cap N <= {cls.ORACLE_MAX_N}")
