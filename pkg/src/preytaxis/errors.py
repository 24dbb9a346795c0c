"""Exception types shared across the package."""


class PreyTaxisError(Exception):
    """Base class for all package errors."""


class NonPositiveParameter(PreyTaxisError):
    """A rate constant or length that must be strictly positive is not."""

    def __init__(self, field: str, value: float):
        self.field = field
        self.value = value
        super().__init__(f"parameter {field} must be > 0, got {value!r}")


class NoPositiveEquilibrium(PreyTaxisError):
    """Coexistence condition alpha3 > beta31 + beta32 fails."""


class SensitivityVanishesAtEquilibrium(PreyTaxisError):
    """phi(w_eq) = 0: threshold formulas divide by it."""


class ZeroMode(PreyTaxisError):
    """Threshold formulas require mode index k >= 1."""


class NotAHopfPoint(PreyTaxisError):
    """Requested Hopf quantities at a mode where no Hopf point exists."""


class DegenerateBranch(PreyTaxisError):
    """Steady-state and Hopf thresholds coincide; branch classification blocked."""


class SingularSystem(PreyTaxisError):
    """A 3x3 solve in the pitchfork pipeline is numerically singular."""

    def __init__(self, which: str, cond: float):
        self.which = which
        self.cond = cond
        super().__init__(f"linear system {which} is singular (cond ~ {cond:.3e})")


class NonFiniteState(PreyTaxisError):
    """A state field contains NaN or infinity."""


class BlowupGuard(PreyTaxisError):
    """A field magnitude exceeded the blow-up guard threshold."""


class StepSizeUnderflow(PreyTaxisError):
    """The CFL step size fell below the representable floor."""


class AmplitudeTooLarge(PreyTaxisError):
    """Initial perturbation leaves the admissible range."""


class KmaxTooLarge(PreyTaxisError):
    """Requested spectral mode count exceeds the grid resolution."""


class InsufficientPeaks(PreyTaxisError):
    """Too few oscillation peaks to estimate a period."""


class NoOscillation(PreyTaxisError):
    """Probe signal is flat; no period to estimate."""


class ConfigError(PreyTaxisError):
    """Malformed or inconsistent run configuration."""
