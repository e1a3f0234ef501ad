"""Exception hierarchy shared by every module."""


class ObjectiveRatesError(ValueError):
    """Base class for domain errors raised by the engine."""


class NonSpdInput(ObjectiveRatesError):
    """A tensor expected to be symmetric positive definite is not."""


class NonSpdMetric(NonSpdInput):
    """A metric argument failed the SPD predicate."""


class SingularF(ObjectiveRatesError):
    """A deformation gradient has non-positive determinant."""


class VarianceMismatch(ObjectiveRatesError):
    """Tensors with incompatible variance or frame were combined."""


class AsymmetricInput(ObjectiveRatesError):
    """A tensor required to be symmetric is not."""


class MissingReference(ObjectiveRatesError):
    """A rate needing the reference configuration was called without it."""

    def __init__(self, msg: str = "reference configuration required"):
        super().__init__(msg)


class ZeroDensity(ObjectiveRatesError):
    """Mass density is zero or negative."""


class OutOfRange(ObjectiveRatesError):
    """A sampled motion was queried outside its time window."""


class StepRejected(ObjectiveRatesError):
    """An integrator step produced an unacceptable state."""


class ConfigError(ObjectiveRatesError):
    """Malformed run configuration or motion spec."""
