"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1,
numeric failures exit 2, contract violations exit 3.
"""


class ContractError(ValueError):
    """A precondition or inter-module contract was violated by the caller."""


class NumericFailure(RuntimeError):
    """A numerical procedure failed (blow-up, non-convergence, overflow)."""


class ConfigError(ValueError):
    """A CLI or experiment-config problem (bad flag, missing file, bad value)."""
