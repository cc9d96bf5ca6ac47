"""Exception hierarchy for the hiergc package."""


class HiergcError(Exception):
    """Base class for all package errors."""


class DivisibilityError(HiergcError):
    """K does not split evenly over the topology for the requested tolerance.

    Carries the offending edge index (1-based, or None when the global
    per-worker load is the problem) and the smallest K' >= K that would work.
    """

    def __init__(self, message, edge=None, suggested_K=None):
        super().__init__(message)
        self.edge = edge
        self.suggested_K = suggested_K


class InfeasibleToleranceError(HiergcError):
    """Some fastest-edge subset cannot collectively hold all sub-datasets."""


class DegenerateError(HiergcError):
    """An edge node would have to hold more sub-datasets than exist (n_i > K)."""


class ConstructionError(HiergcError):
    """Coefficient construction failed the span conditions after all reseeds."""


class MissingPartialError(HiergcError):
    """A worker was asked to encode without all of its assigned partial gradients."""

    def __init__(self, message, missing=()):
        super().__init__(message)
        self.missing = tuple(missing)


class DecodeSingularError(HiergcError):
    """No decoding vector reproduces the all-ones combination within tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DomainError(HiergcError):
    """An argument lies outside the mathematical domain of a formula."""


class NumericalError(HiergcError):
    """A computed intermediate quantity is numerically invalid (e.g. negative radicand)."""


class TooLargeError(HiergcError):
    """An exhaustive enumeration would exceed its safety guard."""


class NoFeasibleToleranceError(HiergcError):
    """Every straggler-tolerance candidate was skipped (no integer load exists)."""


class UnknownKindError(HiergcError):
    """Unrecognised comparison-scheme kind."""


class ConfigError(HiergcError):
    """Invalid experiment configuration; message names the offending field path."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
