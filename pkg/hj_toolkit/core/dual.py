"""
Forward-mode dual arithmetic

A DualScalar carries a value and the derivative along one seeded direction.
The same elementary functions accept plain floats, so the expression
evaluator can run one code path for values and for derivatives.
"""

import math
from typing import Callable, Dict, Union

from .errors import DomainSingularityError


class DualScalar:
    """A value together with its derivative along a single seeded direction

    Instances are treated as immutable; every operation returns a new one.
    """

    __slots__ = ("value", "derivative")

    def __init__(self, value: float, derivative: float = 0.0):
        self.value = float(value)
        self.derivative = float(derivative)

    @classmethod
    def constant(cls, value: float) -> "DualScalar":
        return cls(value, 0.0)

    @classmethod
    def variable(cls, value: float) -> "DualScalar":
        return cls(value, 1.0)

    def __repr__(self) -> str:
        return f"DualScalar({self.value!r}, {self.derivative!r})"

    def __eq__(self, other) -> bool:
        if isinstance(other, DualScalar):
            return self.value == other.value and self.derivative == other.derivative
        return NotImplemented

    __hash__ = None

    def __add__(self, other):
        if isinstance(other, DualScalar):
            return DualScalar(self.value + other.value, self.derivative + other.derivative)
        return DualScalar(self.value + other, self.derivative)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, DualScalar):
            return DualScalar(self.value - other.value, self.derivative - other.derivative)
        return DualScalar(self.value - other, self.derivative)

    def __rsub__(self, other):
        return DualScalar(other - self.value, -self.derivative)

    def __mul__(self, other):
        if isinstance(other, DualScalar):
            return DualScalar(self.value * other.value,
                              self.derivative * other.value + self.value * other.derivative)
        return DualScalar(self.value * other, self.derivative * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, DualScalar):
            if other.value == 0.0:
                raise DomainSingularityError("Division by zero")
            value = self.value / other.value
            return DualScalar(value, (self.derivative - value * other.derivative) / other.value)
        if other == 0:
            raise DomainSingularityError("Division by zero")
        return DualScalar(self.value / other, self.derivative / other)

    def __rtruediv__(self, other):
        if self.value == 0.0:
            raise DomainSingularityError("Division by zero")
        value = other / self.value
        return DualScalar(value, -value * self.derivative / self.value)

    def __neg__(self):
        return DualScalar(-self.value, -self.derivative)

    def __pos__(self):
        return self

    def __pow__(self, exponent):
        return power(self, exponent)

    def __rpow__(self, base):
        return power(base, self)


Number = Union[float, DualScalar]


def _value(x: Number) -> float:
    return x.value if isinstance(x, DualScalar) else x


def _is_integral(x: float) -> bool:
    return float(x).is_integer() and abs(x) < 2**53


def power(base: Number, exponent: Number) -> Number:
    """Raise base to exponent with real-domain checks

    Integer exponents accept any base (except 0 to a negative power); real
    exponents need a positive base, or a zero base with exponent >= 1.
    """
    if not isinstance(exponent, DualScalar) or exponent.derivative == 0.0:
        e = _value(exponent)
        b = _value(base)
        if _is_integral(e):
            k = int(e)
            if b == 0.0 and k < 0:
                raise DomainSingularityError("Zero raised to a negative power")
            if not isinstance(base, DualScalar):
                return float(b) ** k
            if k == 0:
                return DualScalar(1.0, 0.0)
            return DualScalar(b ** k, k * b ** (k - 1) * base.derivative)
        if b < 0.0:
            raise DomainSingularityError("Negative base raised to a non-integer power")
        if b == 0.0:
            if e <= 0.0:
                raise DomainSingularityError("Zero raised to a non-positive power")
            if not isinstance(base, DualScalar):
                return 0.0
            if e < 1.0 and base.derivative != 0.0:
                raise DomainSingularityError("Power below one is not differentiable at zero")
            return DualScalar(0.0, 0.0)
        if not isinstance(base, DualScalar):
            return b ** e
        return DualScalar(b ** e, e * b ** (e - 1.0) * base.derivative)
    # variable exponent: b^y = exp(y ln b)
    b = _value(base)
    if b <= 0.0:
        raise DomainSingularityError("Non-positive base raised to a variable power")
    value = b ** exponent.value
    log_b = math.log(b)
    d_base = base.derivative if isinstance(base, DualScalar) else 0.0
    return DualScalar(value, value * (exponent.derivative * log_b + exponent.value * d_base / b))


def sin(x: Number) -> Number:
    if isinstance(x, DualScalar):
        return DualScalar(math.sin(x.value), math.cos(x.value) * x.derivative)
    return math.sin(x)


def cos(x: Number) -> Number:
    if isinstance(x, DualScalar):
        return DualScalar(math.cos(x.value), -math.sin(x.value) * x.derivative)
    return math.cos(x)


def tan(x: Number) -> Number:
    v = _value(x)
    c = math.cos(v)
    if c == 0.0:
        raise DomainSingularityError("Tangent pole")
    t = math.tan(v)
    if isinstance(x, DualScalar):
        return DualScalar(t, x.derivative / (c * c))
    return t


def exp(x: Number) -> Number:
    try:
        e = math.exp(_value(x))
    except OverflowError:
        raise DomainSingularityError("Exponential overflow") from None
    if isinstance(x, DualScalar):
        return DualScalar(e, e * x.derivative)
    return e


def ln(x: Number) -> Number:
    v = _value(x)
    if v <= 0.0:
        raise DomainSingularityError("Logarithm of a non-positive number")
    if isinstance(x, DualScalar):
        return DualScalar(math.log(v), x.derivative / v)
    return math.log(v)


def sqrt(x: Number) -> Number:
    v = _value(x)
    if v < 0.0:
        raise DomainSingularityError("Square root of a negative number")
    r = math.sqrt(v)
    if isinstance(x, DualScalar):
        if r == 0.0:
            if x.derivative == 0.0:
                return DualScalar(0.0, 0.0)
            raise DomainSingularityError("Square root is not differentiable at zero")
        return DualScalar(r, x.derivative / (2.0 * r))
    return r


def absolute(x: Number) -> Number:
    # derivative at zero taken as 0
    if isinstance(x, DualScalar):
        v = x.value
        sign = 1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0)
        return DualScalar(abs(v), sign * x.derivative)
    return abs(x)


FUNCTIONS: Dict[str, Callable[[Number], Number]] = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "exp": exp,
    "ln": ln,
    "sqrt": sqrt,
    "abs": absolute,
}
