"""Exception types shared across the package."""

from __future__ import annotations


class SignalError(ValueError):
    """Malformed switching signal (non-increasing times, self-jumps, ...)."""


class HorizonError(ValueError):
    """A query time lies outside the stored horizon of a signal or trajectory."""


class UndecidableError(ValueError):
    """The horizon is too short to decide class membership."""


class InfeasibleSpecError(ValueError):
    """No signal of the requested class exists with the given parameters."""


class ConfigError(ValueError):
    """Inconsistent configuration: wrong class for a theorem, bad field, ..."""


class DomainViolation(RuntimeError):
    """A state left the domain of the active mode."""

    def __init__(self, x, mode, t=None):
        self.x = x
        self.mode = mode
        self.t = t
        where = "" if t is None else f" at t={t:.6g}"
        super().__init__(f"state {list(map(float, x))} outside domain of mode {mode}{where}")


class Blowup(RuntimeError):
    """State norm exceeded the configured bound."""

    def __init__(self, t, norm):
        self.t = t
        self.norm = norm
        super().__init__(f"|x| = {norm:.3g} exceeded bound at t={t:.6g}")
