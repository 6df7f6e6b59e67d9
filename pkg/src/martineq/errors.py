"""Exception types raised across the package."""


class MartineqError(Exception):
    """Base class for all package-specific errors."""


class ProblemValidationError(MartineqError, ValueError):
    """A problem specification violates a structural invariant."""


class MissingZeroIncrement(ProblemValidationError):
    """The increment grid does not contain 0 (or contains it more than once)."""


class NotIdentityAtZero(ProblemValidationError):
    """Some state moves under the zero increment."""

    def __init__(self, state: int):
        self.state = state
        super().__init__(f"state {state} is not fixed by the zero increment")


class PlusInfinityPayoff(ProblemValidationError):
    """Payoff tables may contain -inf but never +inf."""


class IndexOutOfRange(ProblemValidationError):
    """A state index falls outside the state set."""


class LengthMismatch(MartineqError, ValueError):
    """A grid function does not match the problem's state count."""


class BadTolerance(MartineqError, ValueError):
    """Tolerance must be strictly positive."""


class BadCap(MartineqError, ValueError):
    """The divergence cap must exceed every finite payoff value."""


class PlusInfinityValue(MartineqError, ValueError):
    """A sampled function handed to the envelope contains +inf."""


class UndefinedSuperdifferential(MartineqError, ValueError):
    """The requested supergradient side does not exist at this query."""


class UndefinedStrategyState(MartineqError, ValueError):
    """A reachable state has no hedge ratio."""

    def __init__(self, time: int, state: int):
        self.time = time
        self.state = state
        super().__init__(f"no hedge ratio at time {time}, state {state}")


class IncompleteTable(MartineqError, ValueError):
    """A path-payoff table does not cover every increment sequence."""


class DegenerateKernel(MartineqError, ValueError):
    """Atom elimination could not extract a kernel vector (ill-conditioned input)."""


class InvalidTree(MartineqError, ValueError):
    """A scenario tree violates the martingale-tree invariants."""


class ParseError(MartineqError, ValueError):
    """A problem or tree file could not be parsed."""
