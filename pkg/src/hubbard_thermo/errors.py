"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input violates a documented precondition (bad particle counts,
    mismatched dimensions, out-of-range time, unsupported scheme, ...)."""


class NumericalFailureError(RuntimeError):
    """A numerical guarantee was violated (non-unitary propagator,
    imaginary residue above tolerance, broken spectral invariant)."""


class ConvergenceError(NumericalFailureError):
    """Step-doubling did not converge within the allowed number of doublings."""


class SweepFormatError(ValueError):
    """A persisted sweep file does not match the documented schema."""
