"""Exception types for numerical failures.

Validation problems raise ``ValueError``; everything deriving from
:class:`NumericalError` means the inputs were fine but a solver gave up.
"""

from __future__ import annotations

__all__ = ["NumericalError", "StepSizeUnderflow", "QuadratureError", "ModeEvolutionError"]


class NumericalError(ArithmeticError):
    """Base class for solver failures."""


class StepSizeUnderflow(NumericalError):
    """The adaptive integrator needed a step below its floor."""

    def __init__(self, t, h, context=""):
        self.t = t
        self.h = h
        self.context = context
        extra = f" ({context})" if context else ""
        super().__init__(f"step size {h:.3e} underflow at t={t:.6e}{extra}")


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, interval=None, error=None):
        self.interval = interval
        self.error = error
        super().__init__(message)


class ModeEvolutionError(NumericalError):
    """A single mode failed; carries its grid index, momentum and energy."""

    def __init__(self, index, k, lam, cause):
        self.index = index
        self.k = k
        self.lam = lam
        self.cause = cause
        super().__init__(f"mode {index} (k={k:.6g}, lambda={lam:.6g}): {cause}")
