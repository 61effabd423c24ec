"""Exception types shared across the package."""


class DroplanError(Exception):
    """Base class for all package-specific errors."""


class DomainError(DroplanError):
    """An argument lies outside the mathematical domain of an operation."""


class DegenerateQuantile(DroplanError):
    """Quantile requested at a mass level where it is not finite (eps = 0)."""


class NumericalFailure(DroplanError):
    """A root-find or quadrature did not converge to the requested tolerance."""


class InsufficientSamples(DroplanError):
    """Monte Carlo estimate requested with too few samples."""


class TableRangeError(DroplanError):
    """Lookup-table query outside the tabulated alpha range."""


class TableVersionError(DroplanError):
    """Persisted lookup table carries an unsupported schema version."""
