#!/usr/bin/env python3
"""
Error types raised by the sampling-moments engine.

All of them subclass ValueError so callers that only know about bad input
can keep catching that.
"""
from typing import Optional


class EngineError(ValueError):
    """Base class for engine failures"""


class DomainError(EngineError):
    """Argument outside the supported domain"""


class PoleError(EngineError):
    """A denominator vanishes at the requested point"""

    def __init__(self, message: str, factor: Optional[str] = None,
                 minimal_n: Optional[int] = None):
        super().__init__(message)
        self.factor = factor
        self.minimal_n = minimal_n


class DivergenceError(EngineError):
    """Limit does not exist"""


class SingularMatrixError(EngineError):
    """No pivot left during symbolic elimination"""
