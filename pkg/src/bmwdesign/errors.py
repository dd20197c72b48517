"""Exception types shared across the package."""


class BMWError(Exception):
    """Base class for all package errors."""


class DesignValidationError(BMWError, ValueError):
    """Input failed validation; ``report`` carries the individual issues."""

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(str(e) for e in report.errors) or "validation failed")


class NumericFailure(BMWError, ArithmeticError):
    """A numerical routine could not produce a usable result."""


class DegenerateSampleError(NumericFailure, ValueError):
    """Sample has zero spread where a positive spread is required."""
