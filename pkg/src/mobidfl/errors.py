"""Exception hierarchy shared across the simulator."""

from __future__ import annotations


class MobiDFLError(Exception):
    """Base class for all simulator errors."""


class ConfigError(MobiDFLError, ValueError):
    """Invalid experiment configuration or parameter value."""


class ContractViolation(MobiDFLError, ValueError):
    """An operation was called with inputs that break its preconditions."""


class DatasetError(MobiDFLError):
    """Dataset files could not be read or failed validation."""


class NumericalError(MobiDFLError, ArithmeticError):
    """Non-finite loss or gradient produced during training."""

    def __init__(self, message: str, round: int | None = None, client: int | None = None):
        self.round = round
        self.client = client
        where = []
        if round is not None:
            where.append(f"round {round}")
        if client is not None:
            where.append(f"client {client}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
