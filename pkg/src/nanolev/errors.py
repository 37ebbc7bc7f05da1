"""Exception types raised by the simulation and analysis layers."""


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class PhysicsError(RuntimeError):
    """A physically meaningful failure (lost trap, failed fit, ...)."""


class UnstableSite(PhysicsError):
    pass


class NoConvergence(PhysicsError):
    pass


class TimestepTooLarge(PhysicsError):
    pass


class TrapLost(PhysicsError):
    pass


class NoStableSite(PhysicsError):
    pass


class FitFailed(PhysicsError):
    def __init__(self, message, best_residual=float("nan"), best=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.best = best


class NoPeakInBand(PhysicsError):
    pass


class FloorNotResolvable(PhysicsError):
    pass
