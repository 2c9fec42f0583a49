"""Exception hierarchy.

``ConfigError`` covers malformed input; ``PhysicsError`` subclasses signal that a
modelling premise (resonance, truncation, dispersive regime) does not hold.  The
CLI maps the two families onto distinct exit codes.
"""
from __future__ import annotations


class MirrorFieldError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(MirrorFieldError, ValueError):
    pass


class LayoutError(MirrorFieldError, ValueError):
    pass


class HermiticityError(MirrorFieldError, ValueError):
    def __init__(self, deviation: float, scale: float):
        self.deviation = deviation
        self.scale = scale
        super().__init__(
            f"operator is not Hermitian: max|A - A^dag| = {deviation:.3e} "
            f"(max|A| = {scale:.3e})"
        )


class ConfigError(MirrorFieldError, ValueError):
    pass


class PhysicsError(MirrorFieldError):
    """A physical modelling assumption is violated."""


class ModelAssumptionError(PhysicsError):
    pass


class PoleError(PhysicsError):
    def __init__(self, n: int, distance: float, guard: float):
        self.n = n
        self.distance = distance
        self.guard = guard
        super().__init__(
            f"rotation angle pole: |nu - lambda*sqrt(n+1)| = {distance:.3e} at photon "
            f"number n={n} is within the guard {guard:.3e}"
        )


class RegimeError(PhysicsError):
    pass


class TruncationError(PhysicsError):
    pass


class InstabilityError(PhysicsError):
    pass
