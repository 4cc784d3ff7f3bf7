"""Exception types shared across the toolkit."""


class IrlForgeError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(IrlForgeError):
    """Array shapes are inconsistent with the declared problem size."""


class Unbounded(IrlForgeError):
    """LP became unbounded (cannot happen for pure feasibility runs)."""


class NoConvergence(IrlForgeError):
    """Iterative solver exhausted its iteration budget."""


class NonPDInnovation(IrlForgeError):
    """Innovation covariance lost positive definiteness."""


class NodeBudgetExceeded(IrlForgeError):
    """Branch-and-bound ran out of nodes before deciding feasibility."""


class NotFeasibleAtHi(IrlForgeError):
    """Line search requires feasibility at the upper bracket end."""


class NonMonotoneDetected(IrlForgeError):
    """Feasible-then-infeasible pattern observed during the line search."""


class NonPositiveProbe(IrlForgeError):
    """Probe vectors must be strictly positive."""


class BudgetNotActive(IrlForgeError):
    """Candidate response does not exhaust its budget."""


class CertificateInvalid(IrlForgeError):
    """Certificate violates the inequalities it claims to satisfy."""


class InfeasibleMask(IrlForgeError):
    """Masking target margin unreachable within the iteration budget."""


class TooLargeForExact(IrlForgeError):
    """Dataset exceeds the exact-enumeration size limit."""


class CalibrationMismatch(IrlForgeError):
    """Calibration was built for different probes."""


class GeneratorNotViolating(IrlForgeError):
    """Scenario generator produced only GARP-consistent data."""


class DegenerateMenu(IrlForgeError):
    """Attention menu is empty or malformed."""


class AllActionsUnused(IrlForgeError):
    """No action has positive marginal probability in some environment."""


class CertificateMismatch(IrlForgeError):
    """Certificate does not match the dataset it is applied to."""


class NonFinite(IrlForgeError):
    """Optimization produced non-finite values (step size too large)."""


class ZeroLikelihood(IrlForgeError):
    """Observed action impossible under every retained belief atom."""


class SingularInnovation(IrlForgeError):
    """Kalman innovation covariance is singular."""


class MissingDensity(IrlForgeError):
    """Sampler variant requires the initialization density."""


class NonFiniteIterate(IrlForgeError):
    """Iterate diverged to a non-finite value."""


class EmptyCloud(IrlForgeError):
    """Sample cloud holds no usable samples."""


class NonUnichainDetected(IrlForgeError):
    """Stationary distribution solve failed (chain not unichain)."""


class OptimizerStall(IrlForgeError):
    """Response optimizer failed to reach the required stationarity."""
