"""Exception types shared across the package.

The split mirrors how callers are expected to react: contract violations
are programming errors, numeric errors abort a run, the degenerate-*
errors signal data conditions a caller may recover from (e.g. falling
back to a zero baseline), and config/parse errors map to CLI exit code 2.
"""


class ContractViolationError(ValueError):
    """An operation was called with inputs that violate its preconditions."""


class NumericError(ArithmeticError):
    """A computation produced or received non-finite / underflowed values."""


class CommonSupportError(ValueError):
    """A logged propensity is not strictly positive (or exceeds 1)."""


class DegenerateSupportError(ValueError):
    """All importance weights are zero; self-normalization is undefined."""


class DegenerateBaselineError(ValueError):
    """A closed-form baseline solver hit a (near-)zero denominator."""


class ConfigError(ValueError):
    """Invalid or unknown configuration keys/values."""


class DatasetParseError(ValueError):
    """A dataset/policy file failed to parse; carries a 1-based row number."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        parts = [message]
        if row is not None:
            parts.append(f"(row {row})")
        if column is not None:
            parts.append(f"(column '{column}')")
        super().__init__(" ".join(parts))
