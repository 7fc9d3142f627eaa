"""Exception types shared across the package."""


class SpinsweepError(Exception):
    """Base class for errors raised by spinsweep."""


class EigensolverError(SpinsweepError):
    """Eigenvalue/eigenvector computation failed or missed its residual gate."""


class PropagationError(SpinsweepError):
    """Time propagation violated a hard invariant (e.g. norm drift)."""


class StepConvergenceError(PropagationError):
    """Step refinement did not reach the requested observable tolerance."""

    def __init__(self, message, achieved_tol=None):
        super().__init__(message)
        self.achieved_tol = achieved_tol


class ScheduleMismatchError(SpinsweepError):
    """Sweep branch is inconsistent with the sign of the spin coupling."""


class TransitionCountError(SpinsweepError):
    """Transition locator found fewer peaks than expected."""

    def __init__(self, message, found):
        super().__init__(message)
        self.found = list(found)
