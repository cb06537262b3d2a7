"""
Gradients of scalar fields on the extended phase space

Exact first partials come from forward-mode dual arithmetic, one seeded
direction per coordinate; central finite differences serve as a cross-check.
"""

import math
from typing import Optional, Protocol, Sequence, Union

import numpy as np

from ..models.geometry import DerivativeReport, ExtendedPoint
from .dual import DualScalar, Number
from .errors import DomainSingularityError

FD_STEP_FACTOR = np.finfo(float).eps ** (1.0 / 3.0)


class ScalarField(Protocol):
    """Anything evaluatable on 2n+1 coordinates with an optional seeded direction"""
    n: int

    def evaluate(self, x: Union[ExtendedPoint, Sequence[float]], seed: Optional[int] = None) -> Number:
        ...


def _coordinates(x: Union[ExtendedPoint, Sequence[float]]) -> np.ndarray:
    if isinstance(x, ExtendedPoint):
        return x.to_array()
    return np.asarray(x, dtype=float)


def grad(f: ScalarField, x: Union[ExtendedPoint, Sequence[float]]) -> np.ndarray:
    """Exact gradient (df/dq1..dqn, df/dp1..dpn, df/ds) at x

    Raises:
        DomainSingularityError: If f or one of its partials is not finite at x
    """
    coords = _coordinates(x)
    if not np.all(np.isfinite(coords)):
        raise DomainSingularityError("Non-finite coordinates", point=_named(coords))
    out = np.empty(len(coords))
    for k in range(len(coords)):
        value = f.evaluate(coords, seed=k)
        d = value.derivative if isinstance(value, DualScalar) else 0.0
        if not math.isfinite(d):
            raise DomainSingularityError(f"Non-finite partial derivative along {_name(k, len(coords))}",
                                         point=_named(coords))
        out[k] = d
    return out


def fd_grad(f: ScalarField, x: Union[ExtendedPoint, Sequence[float]]) -> np.ndarray:
    """Central finite-difference gradient, step cbrt(eps) * max(1, |x_i|)"""
    coords = _coordinates(x)
    out = np.empty(len(coords))
    for k in range(len(coords)):
        h = FD_STEP_FACTOR * max(1.0, abs(coords[k]))
        plus = coords.copy()
        minus = coords.copy()
        plus[k] += h
        minus[k] -= h
        out[k] = (float(f.evaluate(plus)) - float(f.evaluate(minus))) / (plus[k] - minus[k])
    return out


def grad_crosscheck(f: ScalarField, x: Union[ExtendedPoint, Sequence[float]]) -> DerivativeReport:
    """Compare the dual-arithmetic gradient against central finite differences

    Returns:
        DerivativeReport: Both gradients and the worst relative discrepancy
            |g - g_fd| / max(1, |g|) over components
    """
    g = grad(f, x)
    g_fd = fd_grad(f, x)
    discrepancy = np.abs(g - g_fd) / np.maximum(1.0, np.abs(g))
    return DerivativeReport(gradient=g, fd_gradient=g_fd,
                            max_discrepancy=float(discrepancy.max()) if len(discrepancy) else 0.0)


def central_derivative(fn, t: float, h: float = 1e-3) -> float:
    """Five-point central difference of a scalar function of one variable"""
    return (fn(t - 2 * h) - 8 * fn(t - h) + 8 * fn(t + h) - fn(t + 2 * h)) / (12 * h)


def central_second_derivative(fn, t: float, h: float = 1e-3) -> float:
    """Five-point central second difference of a scalar function of one variable"""
    return (-fn(t - 2 * h) + 16 * fn(t - h) - 30 * fn(t) + 16 * fn(t + h) - fn(t + 2 * h)) / (12 * h * h)


def _name(k: int, size: int) -> str:
    n = (size - 1) // 2
    if k < n:
        return f"q{k + 1}"
    if k < 2 * n:
        return f"p{k - n + 1}"
    return "s"


def _named(coords: np.ndarray) -> dict:
    return {_name(k, len(coords)): float(v) for k, v in enumerate(coords)}
