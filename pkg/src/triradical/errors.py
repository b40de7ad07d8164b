"""
Exception types raised by the simulation library and the command-line tool.
"""

from __future__ import annotations

from pathlib import Path


class SensorError(RuntimeError):
    """Base class for every error raised by this package"""


class RejectedInputError(SensorError, ValueError):
    """An operation was given an argument outside its domain"""


class NumericalConsistencyError(SensorError, ArithmeticError):
    """A numerical invariant (positivity, trace law, ...) was violated"""


class DegenerateNormalizationError(NumericalConsistencyError):
    """A yield or average used as a denominator is numerically zero"""


class ContractError(SensorError):
    """The caller used an operation whose preconditions do not hold"""


class ConfigError(SensorError, ValueError):
    """
    A configuration file or command-line override could not be accepted.
    """

    def __init__(self,
                 message: str,
                 *,
                 path: Path | None = None,
                 line: int | None = None,
                 key: str | None = None) -> None:
        self.path = path
        self.line = line
        self.key = key
        where = []
        if path is not None:
            where.append(str(path) if line is None else f'{path}:{line}')
        if key is not None:
            where.append(f'[{key}]')
        super().__init__(f"{' '.join(where)}: {message}" if where else message)
