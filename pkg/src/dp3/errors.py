"""Exception hierarchy for dp3.

Every numerical failure mode gets its own class so callers (and the CLI exit
codes) can react without string matching.
"""


class Dp3Error(Exception):
    """Base class for all dp3 errors."""


class QuadratureNotConverged(Dp3Error):
    def __init__(self, msg, estimate=None, error=None):
        super().__init__(msg)
        self.estimate = estimate
        self.error = error


class DegenerateCurve(Dp3Error):
    """The cut [z0, z1] has collapsed and the requested quantity diverges."""


class BranchPointHit(Dp3Error):
    """Evaluation point too close to a branch point of w."""


class NoConvergence(Dp3Error):
    def __init__(self, msg, last_iterate=None, residual=None):
        super().__init__(msg)
        self.last_iterate = last_iterate
        self.residual = residual


class DegenerateProximity(Dp3Error):
    """phi too close to a multiple of pi/3 for the Newton solver, and not
    exactly on it (where closed forms apply)."""


class ZeroDenominator(Dp3Error):
    pass


class NonconvergentTau(Dp3Error):
    """Theta series requested with im(tau) <= 0."""


class PoleOfLogDeriv(Dp3Error):
    """theta'(z)/theta(z) evaluated too close to a zero of theta."""


class AtPole(Dp3Error):
    def __init__(self, msg, u=None, lattice_point=None, distance=None):
        super().__init__(msg)
        self.u = u
        self.lattice_point = lattice_point
        self.distance = distance


class NearPole(Dp3Error):
    def __init__(self, msg, x=None, pole=None, distance=None):
        super().__init__(msg)
        self.x = x
        self.pole = pole
        self.distance = distance


class HypothesisViolated(Dp3Error):
    """A theorem hypothesis (nonvanishing of specific g_ij products) fails."""

    def __init__(self, msg, vanishing=None):
        super().__init__(msg)
        self.vanishing = vanishing


class NonGenericG(Dp3Error):
    """Stokes-parameter elimination hit a ~0 denominator (g11 or g22)."""


class SectorBoundary(Dp3Error):
    """phi within the guard band of a sector boundary k*pi/3."""


class ChartSingularity(Dp3Error):
    """ODE right side evaluated in the wrong chart (|y| below floor)."""


class StepUnderflow(Dp3Error):
    def __init__(self, msg, location=None):
        super().__init__(msg)
        self.location = location


class MatchingIllConditioned(Dp3Error):
    def __init__(self, msg, cond=None):
        super().__init__(msg)
        self.cond = cond


class IntegrationFailure(Dp3Error):
    pass


class LabelingAmbiguity(Dp3Error):
    """Two turning points closer than tolerance; labels would be a guess."""


class TraceStalled(Dp3Error):
    def __init__(self, msg, polyline=None):
        super().__init__(msg)
        self.polyline = polyline


class BranchAmbiguity(Dp3Error):
    """Variable transform hit a point (tau=0 or x=0) where the root branch
    cannot be tracked."""
