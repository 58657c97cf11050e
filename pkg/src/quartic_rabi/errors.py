"""Exception hierarchy.  Each class carries the CLI exit code it maps to."""


class QuarticRabiError(Exception):
    exit_code = 1

    def record(self) -> dict:
        """Machine-readable description used by the CLI error file."""
        return {"error": type(self).__name__, "message": str(self), "exit_code": self.exit_code}


class ConfigError(QuarticRabiError, ValueError):
    exit_code = 2


class ConvergenceError(QuarticRabiError, RuntimeError):
    """Cutoff doubling hit its ceiling, or a quadrature failed to refine."""

    exit_code = 3

    def __init__(self, message, *, g2=None, delta=None):
        super().__init__(message)
        self.g2 = g2
        self.delta = delta

    def record(self) -> dict:
        rec = super().record()
        rec.update(g2=self.g2, convergence_delta=self.delta)
        return rec


class SolverError(ConvergenceError):
    """The dense eigensolver itself failed."""


class DegeneracyError(ConvergenceError):
    """Ground state too close to degenerate for a finite-difference derivative."""


class InstabilityError(QuarticRabiError, ArithmeticError):
    """Spectrum unbounded from below (A4 = 0 with g2 > g_T)."""

    exit_code = 4

    def __init__(self, message, *, g2=None):
        super().__init__(message)
        self.g2 = g2

    def record(self) -> dict:
        rec = super().record()
        rec["g2"] = self.g2
        return rec
