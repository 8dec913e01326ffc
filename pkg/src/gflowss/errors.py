"""Exception types shared across the package."""


class GflowSsError(Exception):
    """Base class for all library errors."""


class AlreadyActive(GflowSsError):
    """The requested sensor slot is already set in the state mask."""


class AtTerminal(GflowSsError):
    """No action can be applied to a state that already holds k sensors."""


class TerminalState(GflowSsError):
    """Operation requires a non-terminal state."""


class RootState(GflowSsError):
    """Operation requires a non-root state."""


class DimensionMismatch(GflowSsError):
    """Array shape incompatible with the network or operation."""


class NonFiniteGradient(GflowSsError):
    """A gradient entry is NaN or infinite."""


class NonPositiveReward(GflowSsError):
    """A reward that must be strictly positive is not."""


class RankOutOfRange(GflowSsError):
    """Requested j-th best action exceeds the number of legal actions."""


class SingularSubset(GflowSsError):
    """Selected measurement vectors produce a rank-deficient information matrix."""


class SingularGram(GflowSsError):
    """Beamformer Gram matrix is singular or too ill-conditioned to invert."""


class SingularMatrix(GflowSsError):
    """Regularized information matrix is singular at the solver start."""


class WrongCardinality(GflowSsError):
    """State does not hold exactly the number of sensors the operation expects."""


class TooLarge(GflowSsError):
    """Instance is too large for exhaustive enumeration."""
