"""
Exceptions raised by the toolkit
"""

from typing import Any, Dict, Optional, Sequence


class HJToolkitError(Exception):
    """Base class for every error the toolkit raises on purpose"""


class ExpressionSyntaxError(HJToolkitError):
    """Exception raised when an expression string cannot be parsed"""
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class UnknownSymbolError(HJToolkitError):
    """Exception raised when an expression uses a symbol that is neither a coordinate nor a parameter"""
    def __init__(self, symbol: str, position: Optional[int] = None):
        self.symbol = symbol
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"Unknown symbol '{symbol}'{where}")


class DomainSingularityError(HJToolkitError):
    """Exception raised when an evaluation leaves the real domain of an expression

    Carries the failing sub-expression and the coordinates it was evaluated at,
    so an integrator can report where the Hamiltonian blew up.
    """
    def __init__(self, message: str = "Domain singularity",
                 expression: Optional[str] = None,
                 point: Optional[Dict[str, Any]] = None):
        self.reason = message
        self.expression = expression
        self.point = dict(point) if point else {}
        detail = message
        if expression:
            detail += f" in '{expression}'"
        if self.point:
            coords = ", ".join(f"{k}={v!r}" for k, v in self.point.items())
            detail += f" at ({coords})"
        super().__init__(detail)


class NegativeRadicandError(DomainSingularityError):
    """Exception raised when a closed-form solution needs the square root of a negative number"""
    def __init__(self, message: str, subexpression: str, value: float):
        self.subexpression = subexpression
        self.value = value
        super().__init__(f"{message} (radicand {value!r})", expression=subexpression)


class TimeDependenceError(HJToolkitError):
    """Exception raised when a symplectic field is requested for an s-dependent Hamiltonian"""
    def __init__(self, derivative: float, point: Optional[Sequence[float]] = None):
        self.derivative = derivative
        self.point = tuple(point) if point is not None else None
        super().__init__(f"Hamiltonian depends on s (dH/ds = {derivative!r}); use the cosymplectic or contact structure")


class SingularityGuardError(HJToolkitError):
    """Exception raised when a trajectory crosses the declared q_min of a q-singular system"""
    def __init__(self, message: str, tau: float, last_state: Sequence[float]):
        self.tau = tau
        self.last_state = tuple(float(v) for v in last_state)
        super().__init__(f"{message} (last good state at tau={tau!r}: {self.last_state})")


class StepFailureError(HJToolkitError):
    """Exception raised when the integrator gives up before reaching the end of the span"""
    def __init__(self, message: str, tau: float, steps: int):
        self.tau = tau
        self.steps = steps
        super().__init__(f"{message} (tau={tau!r} after {steps} steps)")


class ConfigError(HJToolkitError):
    """Exception raised for malformed configuration or system-definition files"""
    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{message}: {path}" if path else message)
