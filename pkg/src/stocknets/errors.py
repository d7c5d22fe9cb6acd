"""Exception hierarchy shared across the package.

The three classes map onto the CLI exit codes: configuration problems (2),
data validation failures (3), and numeric degeneracies (4).
"""


class ConfigError(ValueError):
    """Bad or unreadable configuration: missing keys, unknown fields, bad paths."""

    exit_code = 2


class DataError(ValueError):
    """Input data violates a precondition: missing cells, empty slices, bad headers."""

    exit_code = 3


class NumericError(ValueError):
    """A computation degenerated: empty intervals, rank deficiency, zero variance."""

    exit_code = 4
