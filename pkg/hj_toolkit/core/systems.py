"""
Worked example systems, their closed-form solutions and residual oracles

Built-in systems:
    ws        Winternitz-Smorodinsky oscillator, cosymplectic, singular at q = 0
    trig      time-dependent trigonometric system, cosymplectic
    damped    damped oscillator, contact
    harmonic  harmonic oscillator, symplectic
    free      free particle, symplectic
"""

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..models.geometry import StructureKind
from . import dual
from .dual import DualScalar, Number
from .errors import ConfigError, DomainSingularityError, NegativeRadicandError
from .expression import Node, parse_expression
from .hamiltonian import HamiltonianFunction, S_ALIASES, Section, parse_hamiltonian, parse_section
from .numerics import central_derivative, central_second_derivative

# |W| below this is treated as a vanishing Wronskian
WRONSKIAN_FLOOR = 1e-14


def _real(x: Number) -> float:
    return x.value if isinstance(x, DualScalar) else float(x)


def _scalar_env(params: Mapping[str, float], names: Sequence[str], value: Number) -> Dict[str, Number]:
    env: Dict[str, Number] = dict(params)
    for name in names:
        env[name] = value
    return env


@dataclass(frozen=True)
class ScalarFunction:
    """A real function of one variable given as an expression

    Evaluates on floats or DualScalars, so derivatives come for free.
    """
    body: Node
    variables: Tuple[str, ...]
    params: Dict[str, float] = field(default_factory=dict)
    source: str = ""

    def __call__(self, x: Number) -> Number:
        try:
            return self.body.evaluate(_scalar_env(self.params, self.variables, x))
        except DomainSingularityError as e:
            raise DomainSingularityError(e.reason, expression=e.expression,
                                         point={self.variables[0]: _real(x)}) from None

    def value(self, x: float) -> float:
        return float(_real(self(float(x))))

    def derivative(self, x: float) -> float:
        result = self(DualScalar.variable(float(x)))
        return result.derivative if isinstance(result, DualScalar) else 0.0


def parse_time_function(text: Union[str, float], params: Optional[Mapping[str, float]] = None) -> ScalarFunction:
    """Parse an expression in t (s and S are accepted as aliases)"""
    text = str(text)
    params = {k: float(v) for k, v in (params or {}).items()}
    body = parse_expression(text, allowed=set(S_ALIASES) | set(params))
    return ScalarFunction(body=body, variables=S_ALIASES, params=params, source=text)


def parse_potential(text: Union[str, float], params: Optional[Mapping[str, float]] = None) -> ScalarFunction:
    """Parse a potential V(q1)"""
    text = str(text)
    params = {k: float(v) for k, v in (params or {}).items()}
    body = parse_expression(text, allowed={"q1"} | set(params))
    return ScalarFunction(body=body, variables=("q1",), params=params, source=text)


# Hamiltonians of the worked examples

def ws_hamiltonian(k: float, omega_expr: Union[str, float] = "1",
                   params: Optional[Mapping[str, float]] = None) -> HamiltonianFunction:
    """H = 1/2 (p^2 + k/q^2) + 1/2 omega(t)^2 q^2

    With k = 0 the inverse-square term vanishes identically and the system
    is the (time-dependent) harmonic oscillator, regular at q = 0.

    Args:
        k: Inverse-square strength
        omega_expr: Frequency as an expression in t
        params: Extra parameters referenced by omega_expr
    """
    bindings = dict(params or {})
    bindings["k"] = float(k)
    omega = f"({omega_expr})"
    if float(k) == 0.0:
        text = f"0.5*p1^2 + 0.5*{omega}^2*q1^2"
        return parse_hamiltonian(text, 1, bindings, q_singular=False, name="ws")
    text = f"0.5*(p1^2 + k/q1^2) + 0.5*{omega}^2*q1^2"
    return parse_hamiltonian(text, 1, bindings, q_singular=True, name="ws")


def trig_hamiltonian(alpha: float, w: float) -> HamiltonianFunction:
    """H = p^2/2 + q^2/2 + alpha sin(w t) q^2 p^2 / 2"""
    return parse_hamiltonian("0.5*p1^2 + 0.5*q1^2 + alpha*sin(w*t)*q1^2*p1^2/2", 1,
                             {"alpha": float(alpha), "w": float(w)}, name="trig")


def damped_hamiltonian(m: float, alpha: float, V_expr: Union[str, float] = "0.5*q1^2",
                       params: Optional[Mapping[str, float]] = None) -> HamiltonianFunction:
    """H = p^2/2m + V(q) + alpha S

    Raises:
        ValueError: If m is not positive
    """
    if not float(m) > 0.0:
        raise ValueError(f"Mass must be positive, got {m!r}")
    bindings = dict(params or {})
    bindings.update({"m": float(m), "alpha": float(alpha)})
    return parse_hamiltonian(f"p1^2/(2*m) + ({V_expr}) + alpha*S", 1, bindings, name="damped")


def harmonic_hamiltonian() -> HamiltonianFunction:
    return parse_hamiltonian("0.5*(p1^2 + q1^2)", 1, name="harmonic")


def free_hamiltonian() -> HamiltonianFunction:
    return parse_hamiltonian("0.5*p1^2", 1, name="free")


# Milne-Pinney closed forms

@dataclass(frozen=True)
class PinneySpec:
    """Solution data of q'' = k/q^3 - omega(t)^2 q built from two solutions
    y1, y2 of y'' = -omega(t)^2 y

    form "classical": q = sqrt(A y1^2 + 2B y1 y2 + C y2^2), AC - B^2 = k/W^2
    form "symmetric": q = (sqrt(2)/|W|) sqrt(C1 y1^2 + C2 y2^2 +- sqrt(4 C1 C2 - k W^2 y1 y2))
    """
    k: float = 1.0
    omega: str = "1"
    y1: str = "cos(t)"
    y2: str = "sin(t)"
    form: str = "classical"
    A: float = 1.0
    B: float = 0.0
    C: float = 1.0
    C1: float = 1.0
    C2: float = 1.0
    branch: int = 1
    params: Dict[str, float] = field(default_factory=dict)
    _functions: Tuple[ScalarFunction, ...] = field(init=False, repr=False, compare=False, default=())

    def __post_init__(self):
        if self.form not in ("classical", "symmetric"):
            raise ValueError(f"Unknown Pinney form '{self.form}' (use classical or symmetric)")
        if self.branch not in (1, -1):
            raise ValueError("branch must be +1 or -1")
        functions = tuple(parse_time_function(text, self.params) for text in (self.omega, self.y1, self.y2))
        object.__setattr__(self, "_functions", functions)

    @property
    def omega_function(self) -> ScalarFunction:
        return self._functions[0]

    @property
    def basis(self) -> Tuple[ScalarFunction, ScalarFunction]:
        return self._functions[1], self._functions[2]

    def wronskian(self, t: float = 0.0) -> float:
        """W = y1 y2' - y2 y1' at t"""
        y1, y2 = self.basis
        return y1.value(t) * y2.derivative(t) - y2.value(t) * y1.derivative(t)

    def constraint_defect(self, t: float = 0.0) -> float:
        """|AC - B^2 - k/W^2| for the classical coefficients"""
        W = self._checked_wronskian(t)
        return abs(self.A * self.C - self.B ** 2 - self.k / W ** 2)

    def rescaled(self, t: float = 0.0) -> "PinneySpec":
        """Scale (A, B, C) so that AC - B^2 = k/W^2

        Raises:
            ValueError: If AC - B^2 and k/W^2 are not both positive
        """
        W = self._checked_wronskian(t)
        determinant = self.A * self.C - self.B ** 2
        target = self.k / W ** 2
        if not (determinant > 0.0 and target > 0.0):
            raise ValueError(f"Cannot rescale: AC - B^2 = {determinant!r}, k/W^2 = {target!r}")
        factor = math.sqrt(target / determinant)
        return replace(self, A=self.A * factor, B=self.B * factor, C=self.C * factor)

    def basis_residual(self, t: float, h: float = 1e-3) -> float:
        """max over the basis of |y'' + omega^2 y| at t"""
        omega2 = self.omega_function.value(t) ** 2
        return max(abs(central_second_derivative(y.value, t, h) + omega2 * y.value(t)) for y in self.basis)

    def _checked_wronskian(self, t: float) -> float:
        W = self.wronskian(t)
        if abs(W) < WRONSKIAN_FLOOR:
            raise DomainSingularityError("Vanishing Wronskian", expression="y1*y2' - y2*y1'", point={"t": t})
        return W


def _pinney_q(spec: PinneySpec, t: Number, W: float) -> Number:
    y1f, y2f = spec.basis
    y1, y2 = y1f(t), y2f(t)
    if spec.form == "classical":
        radicand = spec.A * y1 * y1 + 2.0 * spec.B * y1 * y2 + spec.C * y2 * y2
        if _real(radicand) < 0.0:
            raise NegativeRadicandError("Negative classical Pinney radicand",
                                        "A*y1^2 + 2*B*y1*y2 + C*y2^2", _real(radicand))
        return dual.sqrt(radicand)
    inner = 4.0 * spec.C1 * spec.C2 - spec.k * W * W * y1 * y2
    if _real(inner) < 0.0:
        raise NegativeRadicandError("Negative inner Pinney radicand", "4*C1*C2 - k*W^2*y1*y2", _real(inner))
    outer = spec.C1 * y1 * y1 + spec.C2 * y2 * y2 + spec.branch * dual.sqrt(inner)
    if _real(outer) < 0.0:
        raise NegativeRadicandError("Negative outer Pinney radicand",
                                    "C1*y1^2 + C2*y2^2 +- sqrt(4*C1*C2 - k*W^2*y1*y2)", _real(outer))
    return (math.sqrt(2.0) / abs(W)) * dual.sqrt(outer)


def pinney_solution(spec: PinneySpec, t: float) -> float:
    """q(t) of the selected form

    Raises:
        NegativeRadicandError: A radicand is negative at t
        DomainSingularityError: The Wronskian vanishes at t
    """
    return float(_pinney_q(spec, float(t), spec._checked_wronskian(t)))


def pinney_velocity(spec: PinneySpec, t: float) -> float:
    """gamma(t) = dq/dt by dual arithmetic; W is held at its value at t (it is constant for the linear oscillator)"""
    result = _pinney_q(spec, DualScalar.variable(float(t)), spec._checked_wronskian(t))
    return result.derivative if isinstance(result, DualScalar) else 0.0


def pinney_residual(spec: PinneySpec, ts: Sequence[float], h: float = 1e-3) -> np.ndarray:
    """|q'' - k/q^3 + omega(t)^2 q| at each t, q'' by a five-point stencil"""
    out = np.empty(len(ts))
    q_of = lambda t: pinney_solution(spec, t)
    for i, t in enumerate(ts):
        q = q_of(t)
        if q == 0.0:
            raise DomainSingularityError("Pinney solution vanishes", expression="k/q^3", point={"t": float(t)})
        omega = spec.omega_function.value(t)
        out[i] = abs(central_second_derivative(q_of, t, h) - spec.k / q ** 3 + omega ** 2 * q)
    return out


# Characteristic systems assembled directly from the worked equations

def ws_characteristic_rhs(k: float, omega: Union[str, ScalarFunction] = "1") -> Callable[[float, np.ndarray], np.ndarray]:
    """(q, gamma)' = (gamma, k/q^3 - omega(t)^2 q)"""
    omega_fn = omega if isinstance(omega, ScalarFunction) else parse_time_function(omega)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        q, gamma = y
        if q == 0.0:
            raise DomainSingularityError("Division by zero", expression="k/q^3", point={"q1": 0.0, "t": t})
        return np.array([gamma, k / q ** 3 - omega_fn.value(t) ** 2 * q])

    return rhs


def trig_characteristic_rhs(alpha: float, w: float, sign: int = -1) -> Callable[[float, np.ndarray], np.ndarray]:
    """(q, gamma)' = (gamma (1 + alpha sin(wt) q^2), sign * q (1 + alpha sin(wt) gamma^2))

    sign = -1 follows dgamma/dt = -dH/dq; sign = +1 is the variant whose
    closed form trig_closed_form_gamma gives.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        q, gamma = y
        a = alpha * math.sin(w * t)
        return np.array([gamma * (1.0 + a * q * q), sign * q * (1.0 + a * gamma * gamma)])

    return rhs


def trig_closed_form_gamma(t: Number, alpha: float, w: float, C1: float, C2: float, branch: int = 1) -> Number:
    """gamma = +-(e^{2t} + 2 C2) / sqrt(-a e^{4t} + 4 a e^{2t} C2 - 4 a C2^2 + 4 e^{2t} C1), a = alpha sin(wt)

    Accepts a DualScalar t to get d gamma/dt.

    Raises:
        NegativeRadicandError: If the radicand is not positive at t
    """
    a = alpha * dual.sin(w * t)
    e2 = dual.exp(2.0 * t)
    radicand = -a * e2 * e2 + 4.0 * a * e2 * C2 - 4.0 * a * C2 * C2 + 4.0 * e2 * C1
    if not _real(radicand) > 0.0:
        raise NegativeRadicandError("Non-positive trigonometric radicand",
                                    "-a*e^(4t) + 4*a*e^(2t)*C2 - 4*a*C2^2 + 4*e^(2t)*C1", _real(radicand))
    return branch * (e2 + 2.0 * C2) / dual.sqrt(radicand)


def trig_closed_form_residual(t: float, alpha: float, w: float, C1: float, C2: float,
                              branch: int = 1, h: float = 1e-3) -> float:
    """Residual of the closed form against (q, gamma)' = (gamma (1 + a q^2), q (1 + a gamma^2))

    q is recovered from the second equation, q = gamma' / (1 + a gamma^2), and the
    residual is |q' - gamma (1 + a q^2)| with q' by a five-point stencil.
    """
    def q_of(tau: float) -> float:
        g = trig_closed_form_gamma(DualScalar.variable(tau), alpha, w, C1, C2, branch)
        a = alpha * math.sin(w * tau)
        return g.derivative / (1.0 + a * g.value ** 2)

    gamma = float(_real(trig_closed_form_gamma(float(t), alpha, w, C1, C2, branch)))
    q = q_of(float(t))
    a = alpha * math.sin(w * t)
    return abs(central_derivative(q_of, float(t), h) - gamma * (1.0 + a * q * q))


# Damped oscillator: frozen-coefficient HJ equation and its implicit solution

def damped_coefficients(m: float, alpha: float, potential: ScalarFunction, q: float, S: float) -> Tuple[float, float]:
    """c1 = alpha m, c2 = m (V'(q) - V(q) - alpha S), frozen at (q, S)"""
    V = potential.value(q)
    dV = potential.derivative(q)
    return alpha * m, m * (dV - V - alpha * S)


def _branch_for(c1: float, c2: float, branch: Optional[str]) -> str:
    discriminant = c1 * c1 - 2.0 * c2
    if discriminant == 0.0:
        raise DomainSingularityError("Degenerate discriminant c1^2 - 2 c2 = 0", expression="c1^2 - 2*c2")
    natural = "log" if discriminant > 0.0 else "arctan"
    if branch is not None and branch != natural:
        raise DomainSingularityError(f"The {branch} branch needs the opposite sign of c1^2 - 2 c2 = {discriminant!r}",
                                     expression="c1^2 - 2*c2")
    return natural


def damped_implicit_solution(c1: float, c2: float, gamma: float, branch: Optional[str] = None) -> float:
    """q(gamma) of the implicit solution with frozen c1, c2

    log branch (c1^2 > 2 c2):
        q = (c1/D) ln((gamma + c1 - D)/(gamma + c1 + D)) - ln(gamma^2/2 + c1 gamma + c2), D = sqrt(c1^2 - 2 c2)
    arctan branch (c1^2 < 2 c2):
        q = (2/E) atan((gamma + c1)/E) - ln(gamma^2/2 + c1 gamma + c2), E = sqrt(2 c2 - c1^2)

    Raises:
        DomainSingularityError: Degenerate discriminant or a logarithm out of domain
    """
    branch = _branch_for(c1, c2, branch)
    quadratic = 0.5 * gamma * gamma + c1 * gamma + c2
    if not quadratic > 0.0:
        raise DomainSingularityError("Logarithm of non-positive value", expression="ln(gamma^2/2 + c1*gamma + c2)")
    if branch == "log":
        D = math.sqrt(c1 * c1 - 2.0 * c2)
        ratio = (gamma + c1 - D) / (gamma + c1 + D) if gamma + c1 + D != 0.0 else 0.0
        if not ratio > 0.0:
            raise DomainSingularityError("Logarithm of non-positive value",
                                         expression="ln((gamma + c1 - D)/(gamma + c1 + D))")
        return (c1 / D) * math.log(ratio) - math.log(quadratic)
    E = math.sqrt(2.0 * c2 - c1 * c1)
    return (2.0 / E) * math.atan((gamma + c1) / E) - math.log(quadratic)


def damped_implicit_residual(c1: float, c2: float, gamma: float, branch: Optional[str] = None,
                             h: float = 1e-3) -> float:
    """|dq/dgamma of the implicit solution + gamma/(gamma^2/2 + c1 gamma + c2)|

    The second term is the frozen-coefficient ODE dq/dgamma = -gamma/(gamma^2/2 + c1 gamma + c2).
    The log branch satisfies it; the arctan branch only when c1 = 1.
    """
    branch = _branch_for(c1, c2, branch)
    slope = central_derivative(lambda g: damped_implicit_solution(c1, c2, g, branch), gamma, h)
    return abs(slope + gamma / (0.5 * gamma * gamma + c1 * gamma + c2))


def damped_hj_residual_expanded(m: float, alpha: float, potential: ScalarFunction, gamma: Section,
                                q: float, S: float, frozen_ds: Optional[float] = None) -> float:
    """(gamma^2/2m - V - alpha S) dgamma/dS + (gamma/m) dgamma/dq + (gamma alpha + V'(q))

    Assembled from the damped oscillator's own fields, independently of the
    general contact residual it must equal.
    """
    g = gamma([q], S)[0]
    dq, ds = gamma.jacobian([q], S)
    dgamma_ds = float(ds[0]) if frozen_ds is None else float(frozen_ds)
    V = potential.value(q)
    dV = potential.derivative(q)
    return (g * g / (2.0 * m) - V - alpha * S) * dgamma_ds + (g / m) * float(dq[0, 0]) + (g * alpha + dV)


def damped_reduced_residual(m: float, alpha: float, potential: ScalarFunction, gamma: Section,
                            q: float, S: float) -> float:
    """dgamma/dq + gamma/2 + alpha m + (m/gamma)(V' - V - alpha S): the frozen
    equation with dgamma/dS = 1, divided by gamma/m"""
    g = gamma([q], S)[0]
    if g == 0.0:
        raise DomainSingularityError("Division by zero", expression="m/gamma", point={"q1": q, "S": S})
    dq, _ = gamma.jacobian([q], S)
    V = potential.value(q)
    dV = potential.derivative(q)
    return float(dq[0, 0]) + 0.5 * g + alpha * m + (m / g) * (dV - V - alpha * S)


# Registry

@dataclass(frozen=True)
class BuiltinSystem:
    structure: StructureKind
    defaults: Dict[str, float]
    build: Callable[[Dict[str, float]], HamiltonianFunction]
    description: str = ""


SYSTEMS: Dict[str, BuiltinSystem] = {
    "ws": BuiltinSystem(
        StructureKind.COSYMPLECTIC, {"k": 1.0, "w0": 1.0, "w1": 0.0},
        lambda p: ws_hamiltonian(p["k"], "w0 + w1*t", p),
        "Winternitz-Smorodinsky oscillator, omega(t) = w0 + w1 t"),
    "trig": BuiltinSystem(
        StructureKind.COSYMPLECTIC, {"alpha": 1.0, "w": 1.0},
        lambda p: trig_hamiltonian(p["alpha"], p["w"]),
        "p^2/2 + q^2/2 + alpha sin(wt) q^2 p^2/2"),
    "damped": BuiltinSystem(
        StructureKind.CONTACT, {"m": 1.0, "alpha": 0.1},
        lambda p: damped_hamiltonian(p["m"], p["alpha"], "0.5*q1^2"),
        "p^2/2m + q^2/2 + alpha S"),
    "harmonic": BuiltinSystem(
        StructureKind.SYMPLECTIC, {},
        lambda p: harmonic_hamiltonian(),
        "(p^2 + q^2)/2"),
    "free": BuiltinSystem(
        StructureKind.SYMPLECTIC, {},
        lambda p: free_hamiltonian(),
        "p^2/2"),
}


@dataclass
class SystemDefinition:
    """A loaded system: Hamiltonian, default structure, optional section"""
    name: str
    n: int
    structure: StructureKind
    hamiltonian: HamiltonianFunction
    section: Optional[Section] = None
    params: Dict[str, float] = field(default_factory=dict)
    source: str = "builtin"

    def with_section(self, texts: Sequence[str]) -> "SystemDefinition":
        return replace(self, section=parse_section(list(texts), self.n, self.params))


def builtin_system(name: str, overrides: Optional[Mapping[str, float]] = None) -> SystemDefinition:
    """Instantiate a built-in system; overrides may add names used only by a section"""
    try:
        entry = SYSTEMS[name]
    except KeyError:
        raise ConfigError(f"Unknown system '{name}' (built-ins: {', '.join(sorted(SYSTEMS))})") from None
    params = dict(entry.defaults)
    params.update({k: float(v) for k, v in (overrides or {}).items()})
    hamiltonian = entry.build(params)
    return SystemDefinition(name=name, n=hamiltonian.n, structure=entry.structure,
                            hamiltonian=hamiltonian, params=params)


def system_from_dict(data: Mapping[str, Any], overrides: Optional[Mapping[str, float]] = None,
                     source: str = "") -> SystemDefinition:
    """Build a system from the definition-file layout

    {"n": int, "structure": ..., "hamiltonian": str, "params": {...},
     "section": [str, ...], "name": str, "q_singular": bool}

    Raises:
        ConfigError: Missing or mistyped keys
    """
    for key in ("n", "structure", "hamiltonian"):
        if key not in data:
            raise ConfigError(f"System definition is missing '{key}'", source or None)
    try:
        n = int(data["n"])
        structure = StructureKind.parse(data["structure"])
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e), source or None) from None
    raw_params = data.get("params") or {}
    if not isinstance(raw_params, Mapping):
        raise ConfigError("'params' must be a table of name = number", source or None)
    params = {str(k): float(v) for k, v in raw_params.items()}
    params.update({k: float(v) for k, v in (overrides or {}).items()})
    name = str(data.get("name") or source or "system")
    hamiltonian = parse_hamiltonian(str(data["hamiltonian"]), n, params,
                                    q_singular=bool(data.get("q_singular", False)), name=name)
    section = None
    if data.get("section") is not None:
        section = parse_section(data["section"], n, params)
    return SystemDefinition(name=name, n=n, structure=structure, hamiltonian=hamiltonian,
                            section=section, params=params, source=source or "inline")
