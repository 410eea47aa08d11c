"""Exception and warning types shared across the package."""


class NumericalFailure(RuntimeError):
    """Base class for failures of the numerical machinery (as opposed to
    invalid user input, which raises ValueError)."""


class PoleHitError(NumericalFailure):
    """A frequency-domain solve was requested at (or too close to) a complex
    resonance, where the scattering coefficients are singular."""


class CotSingularityError(NumericalFailure):
    """sin(kL) is below tolerance, so the cotangent in the anchored-string
    reflection formula is undefined at this frequency."""


class ImaginaryResidueError(NumericalFailure):
    """A synthesized time-domain field has an imaginary part above tolerance,
    which signals an under-resolved or badly paired spectral grid."""


class NewtonError(NumericalFailure):
    """Newton refinement failed (iteration cap hit or derivative vanished)."""


class DegenerateResonanceError(NumericalFailure):
    """The two mass-spring resonances coincide (a double pole); the simple
    residue expansion used here does not apply."""


class ConvergenceWarning(UserWarning):
    """A root search did not converge for some index; the run continues."""


class TruncationWarning(UserWarning):
    """Initial data is not negligible at the edge of the spatial window, so a
    truncated inner product may be inaccurate."""
