"""Exception types raised across the package."""


class ZenoError(Exception):
    """Base class for all errors raised by :mod:`zeno_sta`."""


class NonFiniteInput(ZenoError, ValueError):
    pass


class DimMismatch(ZenoError, ValueError):
    pass


class UnknownModel(ZenoError, KeyError):
    pass


class MissingParam(ZenoError, KeyError):
    pass


class GapCollapse(ZenoError):
    """Adjacent eigenvalues came closer than the allowed gap."""

    def __init__(self, t, gap):
        self.t = float(t)
        self.gap = float(gap)
        super().__init__(f"spectral gap {gap:.3e} at t={t:.6g} below tolerance")


class BoundaryStencil(ZenoError, ValueError):
    pass


class NotAProjector(ZenoError, ValueError):
    pass


class FamilyInvalid(ZenoError, ValueError):
    pass


class UnitarityLoss(ZenoError):
    pass


class InitialStateOutsideSubspace(ZenoError, ValueError):
    pass


class ZeroSurvival(ZenoError):
    pass


class InvalidDensityMatrix(ZenoError, ValueError):
    pass


class PositivityLoss(ZenoError):
    pass


class StabilityGuard(ZenoError, ValueError):
    pass


class GridMismatch(ZenoError, ValueError):
    pass


class NormUnderflow(ZenoError):
    pass


class NonConvergence(ZenoError):
    pass


class ConfigInvalid(ZenoError, ValueError):
    """Scenario configuration failed validation; ``field`` names the culprit."""

    def __init__(self, field, message=None):
        self.field = field
        super().__init__(message or f"invalid or missing config field: {field!r}")


class FitDegenerate(ZenoError, ValueError):
    pass
