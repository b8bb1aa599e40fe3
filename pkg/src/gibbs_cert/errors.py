from __future__ import annotations

from typing import Any


class GibbsCertError(Exception):
    """Base class for every error raised by gibbs_cert."""


class DomainError(GibbsCertError, ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class ConfigError(GibbsCertError, ValueError):
    """Raised when a run configuration or an environment override is invalid."""


class SeriesError(GibbsCertError):
    """Raised when a heat-kernel series cannot be evaluated (t = 0 or underflow)."""


class BudgetExceededError(GibbsCertError):
    """Raised when an exhaustive enumeration would exceed its budget."""

    def __init__(self, message: str, *, required: int, budget: int) -> None:
        super().__init__(f"{message} (requires {required:,} evaluations, budget {budget:,})")
        self.required = required
        self.budget = budget


class ModelValidationError(GibbsCertError):
    """Raised when a model, channel or run description is inconsistent."""

    def __init__(self, message: str, *, field: str | None = None) -> None:
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class ModelParseError(GibbsCertError):
    """Raised when a model file is not well-formed."""

    def __init__(
        self, message: str, *, path: str, line: int | None = None, column: int | None = None
    ) -> None:
        location = path if line is None else f"{path}:{line}:{column or 1}"
        super().__init__(f"{location}: {message}")
        self.path = path
        self.line = line
        self.column = column


class CertificateError(GibbsCertError):
    """
    Raised when a Dobrushin-type certificate cannot be granted.

    Attributes
    ----------
        row_norm (float | None): The offending sup-row-sum, when a matrix series was refused.
        margin (float | None): The signed distance to the certification threshold.
        report (Any): Whatever partial report the failing operation produced.

    """

    def __init__(
        self,
        message: str,
        *,
        row_norm: float | None = None,
        margin: float | None = None,
        report: Any = None,  # noqa: ANN401
    ) -> None:
        super().__init__(message)
        self.row_norm = row_norm
        self.margin = margin
        self.report = report
