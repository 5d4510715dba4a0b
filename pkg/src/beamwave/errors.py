"""Error classes mapped to CLI exit-code classes."""


class ConfigError(ValueError):
    """Malformed or inconsistent configuration input (exit code 2)."""


class PreconditionError(RuntimeError):
    """A mathematical hypothesis fails: ellipticity, smallness radius,
    CFL, endpoint conditions (exit code 3)."""


class NumericalError(RuntimeError):
    """Runtime numerical failure: blow-up, divergence, non-convergence
    (exit code 4)."""
