"""Exception hierarchy shared by every module of the package."""


class LiouvilleError(Exception):
    """Base class for all errors raised by this package."""


class IntegrationFailure(LiouvilleError):
    """The linear ODE solver could not reach the requested point."""


class StepUnderflow(IntegrationFailure):
    pass


class WronskianDrift(IntegrationFailure):
    def __init__(self, drift, where=None):
        self.drift = drift
        self.where = where
        super().__init__(f"Wronskian drift {drift:.3e} exceeds tolerance"
                         + ("" if where is None else f" near s={where:.6g}"))


class DerivativeBreakdown(LiouvilleError):
    """|f'| fell below the breakdown threshold inside a difference stencil."""


class UnivalenceViolation(LiouvilleError):
    def __init__(self, points, values):
        self.points = list(points)
        self.values = list(values)
        super().__init__(f"spherical derivative vanishes at {len(self.points)} sample(s), "
                         f"first at z={self.points[0]!r}")


class SnapAmbiguous(LiouvilleError):
    def __init__(self, raw, nearest):
        self.raw = raw
        self.nearest = nearest
        super().__init__(f"growth estimate {raw:.4f} is {abs(raw - nearest):.3f} away "
                         f"from the nearest admissible value {nearest}")


class ConservationViolation(LiouvilleError):
    def __init__(self, max_deviation, constant):
        self.max_deviation = max_deviation
        self.constant = constant
        super().__init__(f"|grad u|^2 + e^(2u) varies by {max_deviation:.3e} "
                         f"around {constant:.6g}")


class QuadratureNonConvergence(LiouvilleError):
    pass


class WindowTooSmall(LiouvilleError):
    def __init__(self, ratio, threshold):
        self.ratio = ratio
        self.threshold = threshold
        super().__init__(f"boundary conformal factor is {ratio:.3e} of the maximum "
                         f"(threshold {threshold:.1e}); enlarge the window")


class FitDegenerate(LiouvilleError):
    pass
