"""
Hamiltonian functions and sections built from parsed expressions
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..models.geometry import ExtendedPoint
from . import dual
from .dual import DualScalar, Number
from .errors import DomainSingularityError
from .expression import Node, parse_expression, print_expression
from .numerics import grad

# Names that read the third coordinate: s in general, t in the cosymplectic
# examples, S in the contact ones.
S_ALIASES = ("s", "t", "S")


@lru_cache(maxsize=None)
def coordinate_names(n: int) -> Tuple[str, ...]:
    return tuple(f"q{i}" for i in range(1, n + 1)) + tuple(f"p{i}" for i in range(1, n + 1)) + ("s",)


def _check_params(params: Mapping[str, float], reserved: Sequence[str]) -> Dict[str, float]:
    checked = {}
    for name, value in (params or {}).items():
        if name in reserved or name in dual.FUNCTIONS:
            raise ValueError(f"Parameter name '{name}' collides with a coordinate or function name")
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"Parameter '{name}' is not finite: {value!r}")
        checked[name] = value
    return checked


def _as_coordinates(x: Union[ExtendedPoint, Sequence[float]]) -> Sequence[float]:
    if isinstance(x, ExtendedPoint):
        return x.q + x.p + (x.s,)
    return x


@dataclass(frozen=True)
class HamiltonianFunction:
    """A scalar field H(q, p, s) on T*Q x R with exact first partials

    Attributes:
        n: Configuration dimension
        body: Parsed expression over q1..qn, p1..pn, s and parameters
        params: Parameter bindings
        source: Original expression text
        q_singular: Whether the system blows up as some q_i -> 0
        name: Optional label for reports
    """
    n: int
    body: Node
    params: Dict[str, float] = field(default_factory=dict)
    source: str = ""
    q_singular: bool = False
    name: str = ""

    def evaluate(self, x: Union[ExtendedPoint, Sequence[float]], seed: Optional[int] = None) -> Number:
        """Evaluate at x; with a seed index, return a DualScalar differentiated along that coordinate"""
        coords = _as_coordinates(x)
        if len(coords) != 2 * self.n + 1:
            raise ValueError(f"Expected {2 * self.n + 1} coordinates, got {len(coords)}")
        env: Dict[str, Number] = dict(self.params)
        names = coordinate_names(self.n)
        for k, (name, value) in enumerate(zip(names, coords)):
            env[name] = DualScalar(value, 1.0 if k == seed else 0.0) if seed is not None else float(value)
        env["t"] = env["S"] = env["s"]
        try:
            result = self.body.evaluate(env)
        except DomainSingularityError as e:
            raise DomainSingularityError(e.reason, expression=e.expression,
                                         point=dict(zip(names, map(float, coords)))) from None
        value = result.value if isinstance(result, DualScalar) else result
        if not math.isfinite(value):
            raise DomainSingularityError("Non-finite Hamiltonian value", expression=self.text(),
                                         point=dict(zip(names, map(float, coords))))
        if seed is None:
            return float(result)
        return result if isinstance(result, DualScalar) else DualScalar(result, 0.0)

    def __call__(self, x: Union[ExtendedPoint, Sequence[float]]) -> float:
        return float(self.evaluate(x))

    def gradient(self, x: Union[ExtendedPoint, Sequence[float]]) -> np.ndarray:
        return grad(self, x)

    def text(self) -> str:
        return print_expression(self.body)


def parse_hamiltonian(text: str, n: int, params: Optional[Mapping[str, float]] = None,
                      q_singular: bool = False, name: str = "") -> HamiltonianFunction:
    """Parse an expression string into a HamiltonianFunction

    Args:
        text: Expression over q1..qn, p1..pn, s (or t, S) and parameter names
        n: Configuration dimension
        params: Parameter bindings
        q_singular: Declare the system singular at q_i = 0
        name: Optional label

    Raises:
        ExpressionSyntaxError: Malformed text, with position
        UnknownSymbolError: Name that is neither coordinate nor parameter
    """
    if n < 1:
        raise ValueError("Dimension n must be at least 1")
    reserved = list(coordinate_names(n)) + list(S_ALIASES)
    checked = _check_params(params, reserved)
    body = parse_expression(text, allowed=set(reserved) | set(checked))
    return HamiltonianFunction(n=n, body=body, params=checked, source=text, q_singular=q_singular, name=name)


@dataclass(frozen=True)
class Section:
    """A section gamma of T*Q x R -> Q x R, p = gamma(q, s)"""
    n: int
    components: Tuple[Node, ...]
    params: Dict[str, float] = field(default_factory=dict)
    sources: Tuple[str, ...] = ()

    def _env(self, q: Sequence[float], s: float, seed: Optional[int]) -> Dict[str, Number]:
        if len(q) != self.n:
            raise ValueError(f"Expected {self.n} base coordinates, got {len(q)}")
        env: Dict[str, Number] = dict(self.params)
        values = list(q) + [s]
        names = [f"q{i}" for i in range(1, self.n + 1)] + ["s"]
        for k, (name, value) in enumerate(zip(names, values)):
            env[name] = DualScalar(value, 1.0 if k == seed else 0.0) if seed is not None else float(value)
        env["t"] = env["S"] = env["s"]
        return env

    def _point(self, q: Sequence[float], s: float) -> Dict[str, float]:
        point = {f"q{i + 1}": float(v) for i, v in enumerate(q)}
        point["s"] = float(s)
        return point

    def _evaluate_all(self, q: Sequence[float], s: float, seed: Optional[int]) -> List[Number]:
        env = self._env(q, s, seed)
        out = []
        for component in self.components:
            try:
                value = component.evaluate(env)
            except DomainSingularityError as e:
                raise DomainSingularityError(e.reason, expression=e.expression,
                                             point=self._point(q, s)) from None
            raw = value.value if isinstance(value, DualScalar) else value
            if not math.isfinite(raw) or (isinstance(value, DualScalar) and not math.isfinite(value.derivative)):
                raise DomainSingularityError("Non-finite section value", expression=component.text(),
                                             point=self._point(q, s))
            out.append(value)
        return out

    def __call__(self, q: Sequence[float], s: float) -> Tuple[float, ...]:
        return tuple(float(v) for v in self._evaluate_all(q, s, None))

    def jacobian(self, q: Sequence[float], s: float) -> Tuple[np.ndarray, np.ndarray]:
        """Exact partials of gamma at (q, s)

        Returns:
            Tuple: (dq, ds) where dq[j, i] = d gamma^j / d q^i and ds[j] = d gamma^j / d s
        """
        dq = np.zeros((self.n, self.n))
        ds = np.zeros(self.n)
        for k in range(self.n + 1):
            for j, value in enumerate(self._evaluate_all(q, s, k)):
                d = value.derivative if isinstance(value, DualScalar) else 0.0
                if k < self.n:
                    dq[j, k] = d
                else:
                    ds[j] = d
        return dq, ds

    def lift(self, q: Sequence[float], s: float) -> ExtendedPoint:
        """The point (q, gamma(q, s), s) of T*Q x R"""
        return ExtendedPoint(tuple(q), self(q, s), s)

    def texts(self) -> List[str]:
        return [print_expression(c) for c in self.components]


def parse_section(texts: Union[str, Sequence[str]], n: int,
                  params: Optional[Mapping[str, float]] = None) -> Section:
    """Parse one expression per momentum component into a Section

    Components may use q1..qn, s (or t, S) and parameter names, not momenta.
    """
    if isinstance(texts, str):
        texts = [texts]
    texts = list(texts)
    if len(texts) != n:
        raise ValueError(f"A section in dimension {n} needs {n} components, got {len(texts)}")
    reserved = [f"q{i}" for i in range(1, n + 1)] + list(S_ALIASES)
    # momenta are not free names of a section, but they must not be parameters either
    checked = _check_params(params, reserved + [f"p{i}" for i in range(1, n + 1)])
    allowed = set(reserved) | set(checked)
    components = tuple(parse_expression(text, allowed=allowed) for text in texts)
    return Section(n=n, components=components, params=checked, sources=tuple(texts))


def closedness_defect(gamma: Section, q: Sequence[float], s: float) -> float:
    """max over i<j of |d gamma^j/d q^i - d gamma^i/d q^j|; zero when n = 1"""
    if gamma.n == 1:
        return 0.0
    dq, _ = gamma.jacobian(q, s)
    return float(np.max(np.abs(dq - dq.T)))
