"""Exception types raised across the library."""


class LqgrlError(Exception):
    """Base class for all library-specific errors."""


class DimensionMismatch(LqgrlError, ValueError):
    """Matrix shapes do not conform."""


class NonStable(LqgrlError, RuntimeError):
    """Lyapunov iteration diverged; the state matrix is not Schur stable."""


class NoStabilizingSolution(LqgrlError, RuntimeError):
    """Riccati iteration failed to converge to a stabilizing solution."""


class SingularResolvent(LqgrlError, RuntimeError):
    """Frequency-response point coincides with an eigenvalue of A."""


class UnstableLoop(LqgrlError, RuntimeError):
    """Closed loop is not Schur stable where stability is required."""


class NotRepresentable(LqgrlError, RuntimeError):
    """Controller cannot be expressed in the requested parameterization."""


class UnstableNominal(LqgrlError, RuntimeError):
    """Nominal (unit-gain) closed loop is unstable; margins are undefined."""


class MarginComputationError(LqgrlError, RuntimeError):
    """Margin verification against direct stability checks failed."""


class RolloutOverflow(LqgrlError, RuntimeError):
    """Simulated state norm exceeded the divergence limit."""


class ConfigError(LqgrlError, ValueError):
    """Experiment configuration file is malformed or inconsistent."""
