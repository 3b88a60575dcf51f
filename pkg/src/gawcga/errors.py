"""Exception types raised across the package."""


class GawcgaError(Exception):
    """Base class for all errors raised by this package."""


class ZeroElement(GawcgaError, ValueError):
    """A norming functional was requested for the zero element."""


class ExponentOutOfRange(GawcgaError, ValueError):
    """An exponent lies outside the open interval (1, inf)."""


class HorizonExceeded(GawcgaError, ValueError):
    """An index lies outside the coordinate range of a finite-horizon space."""


class DivergentExponentSum(GawcgaError, ValueError):
    """The series sum(1 - 1/p_n) cannot be certified finite."""


class WeakSelectionImpossible(GawcgaError):
    """No dictionary atom satisfies the weak selection inequality."""


class NonConvergence(GawcgaError):
    """The best-approximation iteration did not reach its certificate tolerance."""

    def __init__(self, message, achieved=None, iterations=None):
        super().__init__(message)
        self.achieved = achieved
        self.iterations = iterations


class SlackViolated(GawcgaError, ValueError):
    """A perturbed approximant falls outside the admissible error slack."""


class ConstraintViolation(GawcgaError):
    """A realization choice breaks one of the step constraints of the algorithm."""

    def __init__(self, step, which, margin, trace=None):
        super().__init__(f"step {step}: constraint {which!r} violated (margin {margin:.3e})")
        self.step = step
        self.which = which
        self.margin = margin
        self.trace = trace


class NoRoot(GawcgaError, ValueError):
    """The root bracket for rho(xi) = theta*t*xi could not be established."""


class WitnessInvalid(GawcgaError, ValueError):
    """A convex-combination certificate for h/A in A_1(D) does not check out."""


class HypothesisViolated(GawcgaError, ValueError):
    """Arguments fall outside the hypotheses of the inequality being checked."""


class ConstructionInvalid(GawcgaError, ValueError):
    """A counterexample construction failed one of its defining inequalities."""
