"""Shared exception types.

Every error the package raises deliberately derives from one of these, so the
service layer and the CLI can map failures onto HTTP codes and exit codes
without string matching.
"""

from __future__ import annotations


class DomainError(ValueError):
    """A physical quantity is outside its meaningful domain (e.g. T > 1)."""


class ConfigurationError(ValueError):
    """A run configuration is inconsistent or unusable (bad dt, seed reuse, ...)."""


class DataFormatError(ValueError):
    """An input file or stream violates its format contract.

    ``offset`` points at the offending byte (binary inputs) and ``index`` at
    the offending record (tabular inputs) when known.
    """

    def __init__(self, message: str, *, offset: int | None = None, index: int | None = None):
        super().__init__(message)
        self.offset = offset
        self.index = index


class ConvergenceError(RuntimeError):
    """An iterative computation failed to converge; carries diagnostics."""

    def __init__(self, message: str, *, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class RankDeficiencyError(RuntimeError):
    """The fit's normal equations are singular; lists unidentifiable parameters."""

    def __init__(self, message: str, *, parameters: list[str] | None = None):
        super().__init__(message)
        self.parameters = parameters or []
