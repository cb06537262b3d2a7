"""
Geometric data types on the extended phase space T*Q x R
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Sequence, Tuple

import numpy as np


class StructureKind(str, Enum):
    """Geometric structure that decides how the third coordinate s is read"""
    SYMPLECTIC = "symplectic"
    COSYMPLECTIC = "cosymplectic"
    CONTACT = "contact"

    @classmethod
    def parse(cls, value) -> "StructureKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ValueError(f"Unknown structure '{value}' (expected one of: {choices})") from None


def _finite_tuple(values: Sequence[float], label: str) -> Tuple[float, ...]:
    out = tuple(float(v) for v in values)
    for v in out:
        if not math.isfinite(v):
            raise ValueError(f"Non-finite {label} component: {v!r}")
    return out


@dataclass(frozen=True)
class ExtendedPoint:
    """A point (q, p, s) of T*Q x R; s is time t (cosymplectic) or the action S (contact)"""
    q: Tuple[float, ...]
    p: Tuple[float, ...]
    s: float = 0.0

    def __post_init__(self):
        q = _finite_tuple(self.q, "q")
        p = _finite_tuple(self.p, "p")
        if len(q) < 1:
            raise ValueError("Dimension n must be at least 1")
        if len(q) != len(p):
            raise ValueError(f"q has {len(q)} components but p has {len(p)}")
        s = float(self.s)
        if not math.isfinite(s):
            raise ValueError(f"Non-finite s: {s!r}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "s", s)

    @property
    def n(self) -> int:
        return len(self.q)

    def to_array(self) -> np.ndarray:
        """Flatten to (q1..qn, p1..pn, s)"""
        return np.array(self.q + self.p + (self.s,), dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "ExtendedPoint":
        values = [float(v) for v in values]
        if len(values) < 3 or len(values) % 2 == 0:
            raise ValueError(f"Expected 2n+1 coordinates, got {len(values)}")
        n = (len(values) - 1) // 2
        return cls(tuple(values[:n]), tuple(values[n:2 * n]), values[2 * n])

    def coordinates(self) -> Dict[str, float]:
        """Coordinate names q1..qn, p1..pn, s mapped to values"""
        coords = {f"q{i + 1}": v for i, v in enumerate(self.q)}
        coords.update({f"p{i + 1}": v for i, v in enumerate(self.p)})
        coords["s"] = self.s
        return coords


@dataclass(frozen=True)
class TangentValue:
    """A tangent vector (dq, dp, ds) at an extended point"""
    dq: Tuple[float, ...]
    dp: Tuple[float, ...]
    ds: float

    def __post_init__(self):
        object.__setattr__(self, "dq", tuple(float(v) for v in self.dq))
        object.__setattr__(self, "dp", tuple(float(v) for v in self.dp))
        object.__setattr__(self, "ds", float(self.ds))
        if len(self.dq) != len(self.dp):
            raise ValueError("dq and dp must have the same dimension")

    @property
    def n(self) -> int:
        return len(self.dq)

    def to_array(self) -> np.ndarray:
        return np.array(self.dq + self.dp + (self.ds,), dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "TangentValue":
        values = [float(v) for v in values]
        n = (len(values) - 1) // 2
        return cls(tuple(values[:n]), tuple(values[n:2 * n]), values[2 * n])


@dataclass(frozen=True)
class BaseTangent:
    """A tangent vector (dq, ds) to Q x R"""
    dq: Tuple[float, ...]
    ds: float

    def __post_init__(self):
        object.__setattr__(self, "dq", _finite_tuple(self.dq, "dq"))
        ds = float(self.ds)
        if not math.isfinite(ds):
            raise ValueError(f"Non-finite ds: {ds!r}")
        object.__setattr__(self, "ds", ds)

    @property
    def n(self) -> int:
        return len(self.dq)


@dataclass
class DerivativeReport:
    """Dual-arithmetic gradient next to its central finite-difference estimate"""
    gradient: np.ndarray
    fd_gradient: np.ndarray
    max_discrepancy: float


@dataclass
class ContractReport:
    """Defining contractions of a structure evaluated on its dynamics

    `scale` is max(1, |dH|^2, |H|) at the point; defects divided by it are the
    relative defects used for pass/fail decisions.
    """
    kind: StructureKind
    eta_pairing: float
    omega_defect: float
    hamiltonian_pairing_defect: float = 0.0
    omega_residuals: List[float] = field(default_factory=list)
    scale: float = 1.0

    def relative_defect(self) -> float:
        return max(self.omega_defect, self.hamiltonian_pairing_defect) / self.scale

    def passed(self, tolerance: float = 1e-10) -> bool:
        eta_ok = True
        if self.kind is StructureKind.COSYMPLECTIC:
            eta_ok = self.eta_pairing == 1.0
        return eta_ok and self.relative_defect() < tolerance


@dataclass
class HJReport:
    """Pointwise Hamilton-Jacobi diagnostics for a section"""
    residual: List[float]
    relatedness_defect: float
    closedness_defect: float
    difference: List[float] = field(default_factory=list)

    @property
    def residual_norm(self) -> float:
        return max((abs(r) for r in self.residual), default=0.0)
