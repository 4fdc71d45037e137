"""Exception types raised across the package.

Every error derives from :class:`HollingTannerError` so callers (the CLI in
particular) can separate validation problems from numerical failures.
"""


class HollingTannerError(Exception):
    """Base class for all package errors."""


class ValidationError(HollingTannerError, ValueError):
    """Invalid parameters or configuration."""


class NumericalError(HollingTannerError, ArithmeticError):
    """A computation could not be carried out reliably."""


class Singularity(NumericalError):
    """Reaction terms evaluated at a non-positive prey density."""


class DenominatorZero(NumericalError):
    """A closed-form critical curve has a vanishing denominator."""


class RegimeError(ValidationError):
    """Operation requires A0 > 0 but the parameters give A0 <= 0."""


class NotApplicable(ValidationError):
    """A threshold is undefined for the given diffusion ratio."""


class WindowEmpty(ValidationError):
    """No candidate modes exist inside the requested domain-size window."""


class NotABifurcation(HollingTannerError):
    """No critical equality holds at the queried (r, l)."""


class NoTuringHopf(HollingTannerError):
    """No Turing-Hopf point with a homogeneous Hopf mode in the window."""


class NearResonance(NumericalError):
    """An ill-conditioned linear solve in the normal-form computation."""


class Degenerate(NumericalError):
    """Normal-form or planar data violate a non-degeneracy condition."""


class Blowup(NumericalError):
    """Simulation amplitudes left the physically meaningful range."""


class InsufficientData(ValidationError):
    """Trajectory too short for the requested classification."""
