class WesterveltError(RuntimeError):
    """Base class for solver failures."""


class DegeneracyError(WesterveltError):
    """The factor 1 - 2*beta*p dropped to (or below) the degeneracy threshold."""


class NewtonError(WesterveltError):
    """Newton iteration failed (iteration limit or singular Jacobian)."""
