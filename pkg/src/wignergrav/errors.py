"""Exception types raised by wignergrav."""


class WignerGravError(Exception):
    """Base class for all library errors."""


class GridTooSmall(WignerGravError):
    """A state has non-negligible amplitude at the edge of its grid."""


class NonNormalized(WignerGravError):
    """An input that must be normalized is not."""


class GridMismatch(WignerGravError):
    """Two fields that must share a grid do not."""


class ExtrapolationLoss(WignerGravError):
    """Transport moved too much of a field off the grid."""


class NotNormalizable(WignerGravError):
    """A distribution does not decay on the grid."""


class ConvergenceFailure(WignerGravError):
    """An iterative or root-finding step failed to converge."""


class GridEscape(WignerGravError):
    """A propagated wavefunction reached the grid boundary."""


class ConfigError(WignerGravError):
    """Invalid run configuration."""
