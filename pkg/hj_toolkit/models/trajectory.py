"""
Integrator settings and sampled trajectories
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .geometry import ExtendedPoint, StructureKind

METHOD_ALIASES = {
    "rk45": "rk45-adaptive",
    "rk45-adaptive": "rk45-adaptive",
    "rk4": "rk4-fixed",
    "rk4-fixed": "rk4-fixed",
}


@dataclass
class IntegratorConfig:
    """Integrator settings

    Attributes:
        method: rk45-adaptive (embedded pair) or rk4-fixed
        step: Step size of rk4-fixed
        rtol: Relative tolerance of rk45-adaptive
        atol: Absolute tolerance of rk45-adaptive
        max_steps: Step budget before giving up
        samples: Output samples of rk45-adaptive over the span (rk4-fixed reports every step)
        q_min: Smallest |q_i| allowed for systems declared q-singular
    """
    method: str = "rk45-adaptive"
    step: float = 1e-2
    rtol: float = 1e-9
    atol: float = 1e-12
    max_steps: int = 1_000_000
    samples: int = 1001
    q_min: float = 1e-6

    def __post_init__(self):
        try:
            self.method = METHOD_ALIASES[str(self.method).lower()]
        except KeyError:
            raise ValueError(f"Unknown integration method '{self.method}' (use rk45 or rk4)") from None
        for name in ("step", "rtol", "atol"):
            if not float(getattr(self, name)) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if int(self.max_steps) < 1:
            raise ValueError("max_steps must be at least 1")
        if int(self.samples) < 2:
            raise ValueError("samples must be at least 2")
        if float(self.q_min) < 0.0:
            raise ValueError("q_min must be non-negative")
        self.max_steps = int(self.max_steps)
        self.samples = int(self.samples)

    @property
    def adaptive(self) -> bool:
        return self.method == "rk45-adaptive"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "IntegratorConfig":
        """Build from a config table, ignoring unknown keys"""
        data = data or {}
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)


@dataclass
class Trajectory:
    """A time-sampled curve of extended points with per-sample diagnostics

    `states` rows are (q1..qn, p1..pn, s); along characteristics the p block
    holds gamma.
    """
    n: int
    kind: StructureKind
    taus: np.ndarray
    states: np.ndarray
    hamiltonian: np.ndarray
    defect: Optional[np.ndarray] = None
    residuals: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.hamiltonian = np.asarray(self.hamiltonian, dtype=float)
        if self.states.shape != (len(self.taus), 2 * self.n + 1):
            raise ValueError(f"states must have shape ({len(self.taus)}, {2 * self.n + 1}), got {self.states.shape}")
        if len(self.taus) > 1 and not np.all(np.diff(self.taus) > 0):
            raise ValueError("tau samples must be strictly increasing")
        if not (np.all(np.isfinite(self.states)) and np.all(np.isfinite(self.taus))):
            raise ValueError("Trajectory contains non-finite samples")

    def __len__(self) -> int:
        return len(self.taus)

    @property
    def q(self) -> np.ndarray:
        return self.states[:, :self.n]

    @property
    def p(self) -> np.ndarray:
        return self.states[:, self.n:2 * self.n]

    @property
    def s(self) -> np.ndarray:
        return self.states[:, 2 * self.n]

    @property
    def points(self) -> List[ExtendedPoint]:
        return [ExtendedPoint.from_array(row) for row in self.states]

    @property
    def final(self) -> ExtendedPoint:
        return ExtendedPoint.from_array(self.states[-1])

    def columns(self) -> List[str]:
        names = ["tau"] + [f"q{i}" for i in range(1, self.n + 1)] + [f"p{i}" for i in range(1, self.n + 1)]
        return names + ["s", "H", "defect"]

    def rows(self) -> List[List[float]]:
        """One row per sample in column order; a missing defect is reported as 0"""
        defect = self.defect if self.defect is not None else np.zeros(len(self.taus))
        return [[float(t), *map(float, x), float(h), float(d)]
                for t, x, h, d in zip(self.taus, self.states, self.hamiltonian, defect)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "n": self.n,
            "label": self.label,
            "columns": self.columns(),
            "rows": self.rows(),
        }


@dataclass
class ComparisonResult:
    """Lifted projected trajectory against the full trajectory from the lifted start"""
    max_point_deviation: float
    lifted: Trajectory
    full: Trajectory
    deviations: np.ndarray = field(default_factory=lambda: np.zeros(0))
