"""
Integration of the structure fields, characteristics of the HJ equations,
lifted-versus-full comparison and energy/dissipation diagnostics
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
from scipy.integrate import RK45

from ..models.geometry import ExtendedPoint, StructureKind
from ..models.trajectory import ComparisonResult, IntegratorConfig, Trajectory
from .errors import DomainSingularityError, SingularityGuardError, StepFailureError
from .hamiltonian import HamiltonianFunction, Section
from .structures import field_array

T = TypeVar("T")
R = TypeVar("R")

Rhs = Callable[[float, np.ndarray], np.ndarray]
Guard = Callable[[np.ndarray], bool]


def _span(tau_span: Union[float, Sequence[float]]) -> Tuple[float, float]:
    if isinstance(tau_span, (int, float)):
        t0, t1 = 0.0, float(tau_span)
    else:
        t0, t1 = (float(v) for v in tau_span)
    if not (math.isfinite(t0) and math.isfinite(t1)) or not t1 > t0:
        raise ValueError(f"tau span must be finite and increasing, got ({t0}, {t1})")
    return t0, t1


def _q_guard(H: HamiltonianFunction, cfg: IntegratorConfig, n: int) -> Optional[Guard]:
    if not H.q_singular:
        return None
    q_min = cfg.q_min
    return lambda y: bool(np.min(np.abs(y[:n])) >= q_min)


def _check_state(y: np.ndarray, guard: Optional[Guard], tau: float, last_tau: float,
                 last_y: np.ndarray) -> None:
    if not np.all(np.isfinite(y)):
        raise SingularityGuardError("Non-finite state", last_tau, last_y)
    if guard is not None and not guard(y):
        raise SingularityGuardError(f"Crossed the singularity guard near tau={tau!r}", last_tau, last_y)


def solve(rhs: Rhs, y0: Sequence[float], tau_span: Union[float, Sequence[float]],
          cfg: Optional[IntegratorConfig] = None, guard: Optional[Guard] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Integrate y' = rhs(tau, y) over the span

    rk45-adaptive samples `cfg.samples` evenly spaced taus through the
    stepper's dense output; rk4-fixed reports every step.

    Raises:
        SingularityGuardError: The guard rejected a state or an evaluation was singular
        StepFailureError: The step budget ran out or the stepper failed
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = _span(tau_span)
    y0 = np.asarray(y0, dtype=float)
    _check_state(y0, guard, t0, t0, y0)
    if cfg.adaptive:
        return _solve_rk45(rhs, y0, t0, t1, cfg, guard)
    return _solve_rk4(rhs, y0, t0, t1, cfg, guard)


def _solve_rk45(rhs: Rhs, y0: np.ndarray, t0: float, t1: float, cfg: IntegratorConfig,
                guard: Optional[Guard]) -> Tuple[np.ndarray, np.ndarray]:
    sample_taus = np.linspace(t0, t1, cfg.samples)
    states = [y0.copy()]
    index = 1
    try:
        solver = RK45(rhs, t0, y0, t1, rtol=cfg.rtol, atol=cfg.atol)
    except DomainSingularityError as e:
        raise SingularityGuardError(f"Singular evaluation: {e}", t0, y0) from e
    steps = 0
    while solver.status == "running":
        if steps >= cfg.max_steps:
            raise StepFailureError("Step budget exhausted", solver.t, steps)
        last_tau, last_y = solver.t, solver.y.copy()
        try:
            message = solver.step()
        except DomainSingularityError as e:
            raise SingularityGuardError(f"Singular evaluation: {e}", last_tau, last_y) from e
        steps += 1
        if solver.status == "failed":
            raise StepFailureError(f"Integrator failed: {message}", last_tau, steps)
        _check_state(solver.y, guard, solver.t, last_tau, last_y)
        if index < len(sample_taus) and sample_taus[index] <= solver.t:
            dense = solver.dense_output()
            while index < len(sample_taus) and sample_taus[index] <= solver.t:
                tau = sample_taus[index]
                states.append(solver.y.copy() if tau == solver.t else dense(tau))
                index += 1
    if index < len(sample_taus):
        # the final sample equals t1 up to rounding of linspace
        states.append(solver.y.copy())
    return sample_taus, np.array(states)


def rk4_step(rhs: Rhs, tau: float, y: np.ndarray, h: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step"""
    k1 = rhs(tau, y)
    k2 = rhs(tau + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(tau + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(tau + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _solve_rk4(rhs: Rhs, y0: np.ndarray, t0: float, t1: float, cfg: IntegratorConfig,
               guard: Optional[Guard]) -> Tuple[np.ndarray, np.ndarray]:
    count = max(1, int(math.ceil((t1 - t0) / cfg.step - 1e-9)))
    if count > cfg.max_steps:
        raise StepFailureError(f"rk4-fixed needs {count} steps", t0, cfg.max_steps)
    h = (t1 - t0) / count
    taus = t0 + h * np.arange(count + 1)
    taus[-1] = t1
    states = np.empty((count + 1, len(y0)))
    states[0] = y0
    y = y0
    for k in range(count):
        try:
            y_next = rk4_step(rhs, taus[k], y, h)
        except DomainSingularityError as e:
            raise SingularityGuardError(f"Singular evaluation: {e}", taus[k], y) from e
        _check_state(y_next, guard, taus[k + 1], taus[k], y)
        states[k + 1] = y_next
        y = y_next
    return taus, states


def _field_rhs(kind: StructureKind, H: HamiltonianFunction) -> Rhs:
    return lambda tau, y: field_array(kind, H, y)


def _hamiltonian_values(H: HamiltonianFunction, states: np.ndarray) -> np.ndarray:
    return np.array([H(row) for row in states])


def _initial_state(x0: Union[ExtendedPoint, Sequence[float]], n: int) -> np.ndarray:
    y0 = x0.to_array() if isinstance(x0, ExtendedPoint) else np.asarray(x0, dtype=float)
    if len(y0) != 2 * n + 1:
        raise ValueError(f"Initial point has {len(y0)} coordinates, expected {2 * n + 1}")
    return y0


def integrate(kind: StructureKind, H: HamiltonianFunction, x0: Union[ExtendedPoint, Sequence[float]],
              tau_span: Union[float, Sequence[float]], cfg: Optional[IntegratorConfig] = None,
              diagnostics: bool = True) -> Trajectory:
    """Integral curve of the structure's field from x0

    Args:
        kind: Structure whose field is followed
        H: Hamiltonian
        x0: Initial extended point
        tau_span: End time, or (start, end)
        cfg: Integrator settings
        diagnostics: Fill the per-sample dissipation defect

    Returns:
        Trajectory: Samples with H values (and defects)
    """
    kind = StructureKind.parse(kind)
    cfg = cfg or IntegratorConfig()
    y0 = _initial_state(x0, H.n)
    taus, states = solve(_field_rhs(kind, H), y0, tau_span, cfg, _q_guard(H, cfg, H.n))
    trajectory = Trajectory(n=H.n, kind=kind, taus=taus, states=states,
                            hamiltonian=_hamiltonian_values(H, states), label="integrate")
    if diagnostics:
        trajectory.defect = dissipation_diagnostic(kind, trajectory, H)
    return trajectory


def characteristics(kind: StructureKind, H: HamiltonianFunction, q0: Sequence[float], gamma0: Sequence[float],
                    s0: float, tau_span: Union[float, Sequence[float]],
                    cfg: Optional[IntegratorConfig] = None, diagnostics: bool = True) -> Trajectory:
    """Characteristic curves of the structure's HJ equation, with p identified with gamma

    cosymplectic: dq/dtau = dH/dp, dgamma_j/dtau = -dH/dq^j, ds/dtau = 1
    contact: dgamma_j/dtau = -dH/dq^j - gamma_j dH/ds, ds/dtau = sum gamma_i dH/dp_i - H
    symplectic: as cosymplectic with ds/dtau = 0
    All partials are taken at (q, gamma, s); the p block of the result holds gamma.
    """
    kind = StructureKind.parse(kind)
    cfg = cfg or IntegratorConfig()
    q0 = [float(v) for v in q0]
    gamma0 = [float(v) for v in gamma0]
    if len(q0) != H.n or len(gamma0) != H.n:
        raise ValueError(f"Characteristics of an n={H.n} system need {H.n} values of q0 and gamma0")
    n = H.n

    def rhs(tau: float, y: np.ndarray) -> np.ndarray:
        # y = (q, gamma, s); the HJ equation's characteristic system at p = gamma
        return field_array(kind, H, y)

    y0 = np.array(q0 + gamma0 + [float(s0)])
    taus, states = solve(rhs, y0, tau_span, cfg, _q_guard(H, cfg, n))
    trajectory = Trajectory(n=n, kind=kind, taus=taus, states=states,
                            hamiltonian=_hamiltonian_values(H, states), label="characteristics")
    if diagnostics:
        trajectory.defect = dissipation_diagnostic(kind, trajectory, H)
    return trajectory


def compare_lifted(kind: StructureKind, H: HamiltonianFunction, gamma: Section, base0: Tuple[Sequence[float], float],
                   tau_span: Union[float, Sequence[float]],
                   cfg: Optional[IntegratorConfig] = None) -> ComparisonResult:
    """Integrate the projected field on Q x R, lift it through gamma, and
    compare with the full field integrated from the lifted start

    Returns:
        ComparisonResult: Max-norm deviation over matched taus and both trajectories
    """
    kind = StructureKind.parse(kind)
    cfg = cfg or IntegratorConfig()
    n = H.n
    q0, s0 = base0
    q0 = [float(v) for v in q0]

    def projected_rhs(tau: float, y: np.ndarray) -> np.ndarray:
        q, s = y[:n], float(y[n])
        coords = np.concatenate([q, gamma(q, s), [s]])
        full = field_array(kind, H, coords)
        return np.concatenate([full[:n], [full[-1]]])

    base_guard = _q_guard(H, cfg, n)
    taus, base_states = solve(projected_rhs, q0 + [float(s0)], tau_span, cfg, base_guard)
    lifted_states = np.array([np.concatenate([row[:n], gamma(row[:n], float(row[n])), [row[n]]])
                              for row in base_states])
    lifted = Trajectory(n=n, kind=kind, taus=taus, states=lifted_states,
                        hamiltonian=_hamiltonian_values(H, lifted_states), label="lifted")
    full = integrate(kind, H, lifted_states[0], (taus[0], taus[-1]), cfg, diagnostics=False)
    full.label = "full"
    deviations = np.max(np.abs(lifted.states - full.states), axis=1)
    return ComparisonResult(max_point_deviation=float(np.max(deviations)), lifted=lifted, full=full,
                            deviations=deviations)


def time_derivative(values: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """d/dtau of sampled values

    Fourth-order stencils on uniform samples (five or more), second-order
    np.gradient otherwise.
    """
    values = np.asarray(values, dtype=float)
    taus = np.asarray(taus, dtype=float)
    if len(values) < 2:
        return np.zeros_like(values)
    steps = np.diff(taus)
    h = steps[0]
    if len(values) < 5 or not np.allclose(steps, h, rtol=1e-9, atol=0.0):
        return np.gradient(values, taus, edge_order=2 if len(values) > 2 else 1)
    f = values
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
    d[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * h)
    d[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * h)
    return d


def dissipation_diagnostic(kind: StructureKind, trajectory: Trajectory, H: HamiltonianFunction) -> np.ndarray:
    """Per-sample defect of the structure's energy law

    symplectic: |H(tau) - H(0)|
    cosymplectic: |dH/dtau - dH/dt|
    contact: |dH/dtau + H dH/ds|
    with dH/dtau from finite differences along the samples.
    """
    kind = StructureKind.parse(kind)
    values = np.array([H(row) for row in trajectory.states])
    if kind is StructureKind.SYMPLECTIC:
        return np.abs(values - values[0])
    s_index = 2 * H.n
    dH_ds = np.array([H.evaluate(row, seed=s_index).derivative for row in trajectory.states])
    rate = time_derivative(values, trajectory.taus)
    if kind is StructureKind.COSYMPLECTIC:
        return np.abs(rate - dH_ds)
    return np.abs(rate + values * dH_ds)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Map in input order; any worker count yields the same list as a plain loop"""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
