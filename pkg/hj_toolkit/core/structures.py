"""
Structure-specific Hamiltonian dynamics and their defining contractions

Sign conventions: omega = sum dq^i ^ dp_i, the cosymplectic pair is
(dt, Omega_H = sum dq^i ^ dp_i + dH ^ dt), and the contact form is
eta = ds - sum p_i dq^i, so that d eta = sum dq^i ^ dp_i.
"""

from typing import Sequence, Union

import numpy as np

from ..models.geometry import ContractReport, ExtendedPoint, StructureKind, TangentValue
from .errors import TimeDependenceError
from .hamiltonian import HamiltonianFunction
from .numerics import grad

Point = Union[ExtendedPoint, Sequence[float]]

# |dH/ds| above this makes the symplectic field ill-defined
TIME_DEPENDENCE_TOLERANCE = 1e-12


def _coords(x: Point) -> np.ndarray:
    if isinstance(x, ExtendedPoint):
        return x.to_array()
    return np.asarray(x, dtype=float)


def field_from_gradient(kind: StructureKind, g: np.ndarray, coords: np.ndarray, h_value: float) -> np.ndarray:
    """Assemble the structure's vector field from dH, the point and H(x)

    Returns:
        np.ndarray: (dq1..dqn, dp1..dpn, ds)
    """
    n = (len(coords) - 1) // 2
    dH_dq, dH_dp, dH_ds = g[:n], g[n:2 * n], g[2 * n]
    out = np.empty(2 * n + 1)
    out[:n] = dH_dp
    if kind is StructureKind.CONTACT:
        p = coords[n:2 * n]
        out[n:2 * n] = -dH_dq - p * dH_ds
        out[2 * n] = float(np.dot(p, dH_dp)) - h_value
    else:
        out[n:2 * n] = -dH_dq
        out[2 * n] = 1.0 if kind is StructureKind.COSYMPLECTIC else 0.0
    return out


def field_array(kind: StructureKind, H: HamiltonianFunction, coords: Sequence[float]) -> np.ndarray:
    """The structure's vector field at raw coordinates, as an array (the integrators' fast path)"""
    coords = np.asarray(coords, dtype=float)
    g = grad(H, coords)
    if kind is StructureKind.SYMPLECTIC and abs(g[-1]) >= TIME_DEPENDENCE_TOLERANCE:
        raise TimeDependenceError(float(g[-1]), coords)
    h_value = H(coords) if kind is StructureKind.CONTACT else 0.0
    return field_from_gradient(kind, g, coords, h_value)


def symplectic_field(H: HamiltonianFunction, x: Point) -> TangentValue:
    """X_H with iota_X omega = dH: dq = dH/dp, dp = -dH/dq, ds = 0

    Raises:
        TimeDependenceError: If |dH/ds| >= 1e-12 at x
    """
    return TangentValue.from_array(field_array(StructureKind.SYMPLECTIC, H, _coords(x)))


def cosymplectic_reeb(H: HamiltonianFunction, x: Point) -> TangentValue:
    """Reeb field R_H of (dt, Omega_H): ds = 1, dq = dH/dp, dp = -dH/dq"""
    return TangentValue.from_array(field_array(StructureKind.COSYMPLECTIC, H, _coords(x)))


def contact_field(H: HamiltonianFunction, x: Point) -> TangentValue:
    """Contact Hamiltonian field with eta(X_H) = -H

    dq = dH/dp, dp = -dH/dq - p dH/ds, ds = sum p_i dH/dp_i - H
    """
    return TangentValue.from_array(field_array(StructureKind.CONTACT, H, _coords(x)))


def vector_field(kind: StructureKind, H: HamiltonianFunction, x: Point) -> TangentValue:
    """Dispatch to the field of the given structure"""
    kind = StructureKind.parse(kind)
    return TangentValue.from_array(field_array(kind, H, _coords(x)))


def canonical_matrix(n: int, size: int) -> np.ndarray:
    """Matrix of sum dq^i ^ dp_i on the first 2n of `size` coordinates"""
    m = np.zeros((size, size))
    for i in range(n):
        m[i, n + i] = 1.0
        m[n + i, i] = -1.0
    return m


def omega_h_matrix(g: np.ndarray) -> np.ndarray:
    """Matrix of Omega_H = sum dq^i ^ dp_i + dH ^ dt in (q, p, s) coordinates"""
    size = len(g)
    n = (size - 1) // 2
    m = canonical_matrix(n, size)
    m[:, -1] += g
    m[-1, :] -= g
    return m


def contact_form(coords: np.ndarray) -> np.ndarray:
    """Components of eta = ds - sum p_i dq^i at the point"""
    n = (len(coords) - 1) // 2
    eta = np.zeros(len(coords))
    eta[:n] = -coords[n:2 * n]
    eta[-1] = 1.0
    return eta


def contract_check(kind: StructureKind, H: HamiltonianFunction, x: Point) -> ContractReport:
    """Evaluate the contractions that define the structure's dynamics at x

    cosymplectic: <dt, R_H> and iota_{R_H} Omega_H on all 2n+1 directions
    contact: eta(X_H) + H, and flat(X_H) - (-(R(H) + H) eta + dH) on all directions
    symplectic: iota_{X_H} omega - dH on the 2n phase-space directions
    """
    kind = StructureKind.parse(kind)
    coords = _coords(x)
    size = len(coords)
    n = (size - 1) // 2
    g = grad(H, coords)
    h_value = H(coords)
    scale = max(1.0, float(np.max(np.abs(g))) ** 2, abs(h_value))

    if kind is StructureKind.SYMPLECTIC:
        if abs(g[-1]) >= TIME_DEPENDENCE_TOLERANCE:
            raise TimeDependenceError(float(g[-1]), coords)
        X = field_from_gradient(kind, g, coords, h_value)
        omega = canonical_matrix(n, 2 * n)
        residuals = X[:2 * n] @ omega - g[:2 * n]
        return ContractReport(kind=kind, eta_pairing=float(X[-1]),
                              omega_defect=float(np.max(np.abs(residuals))),
                              omega_residuals=residuals.tolist(), scale=scale)

    if kind is StructureKind.COSYMPLECTIC:
        R = field_from_gradient(kind, g, coords, h_value)
        residuals = R @ omega_h_matrix(g)
        return ContractReport(kind=kind, eta_pairing=float(R[-1]),
                              omega_defect=float(np.max(np.abs(residuals))),
                              omega_residuals=residuals.tolist(), scale=scale)

    X = field_from_gradient(kind, g, coords, h_value)
    eta = contact_form(coords)
    pairing = float(X @ eta)
    flat = X @ canonical_matrix(n, size) + pairing * eta
    target = -(g[-1] + h_value) * eta + g
    residuals = flat - target
    return ContractReport(kind=kind, eta_pairing=pairing,
                          omega_defect=float(np.max(np.abs(residuals))),
                          hamiltonian_pairing_defect=abs(pairing + h_value),
                          omega_residuals=residuals.tolist(), scale=scale)


def reeb_field(kind: StructureKind, H: HamiltonianFunction, x: Point) -> TangentValue:
    """Reeb field of the structure: R_H (cosymplectic) or d/ds (contact)"""
    kind = StructureKind.parse(kind)
    if kind is StructureKind.COSYMPLECTIC:
        return cosymplectic_reeb(H, x)
    if kind is StructureKind.CONTACT:
        n = H.n
        return TangentValue((0.0,) * n, (0.0,) * n, 1.0)
    raise ValueError("A symplectic manifold carries no Reeb field")


def reeb_check(kind: StructureKind, H: HamiltonianFunction, x: Point) -> ContractReport:
    """iota_R eta and iota_R d eta (contact) or iota_R dt and iota_R Omega_H (cosymplectic)"""
    kind = StructureKind.parse(kind)
    if kind is StructureKind.COSYMPLECTIC:
        return contract_check(kind, H, x)
    coords = _coords(x)
    R = reeb_field(kind, H, coords).to_array()
    n = (len(coords) - 1) // 2
    residuals = R @ canonical_matrix(n, len(coords))
    return ContractReport(kind=kind, eta_pairing=float(R @ contact_form(coords)),
                          omega_defect=float(np.max(np.abs(residuals))),
                          omega_residuals=residuals.tolist())


def poisson_bracket(f: HamiltonianFunction, g: HamiltonianFunction, x: Point) -> float:
    """{f, g} = sum_i (df/dq^i dg/dp_i - df/dp_i dg/dq^i)"""
    if f.n != g.n:
        raise ValueError(f"Bracket of functions on different spaces (n={f.n} and n={g.n})")
    coords = _coords(x)
    n = f.n
    gf = grad(f, coords)
    gg = grad(g, coords)
    return float(np.dot(gf[:n], gg[n:2 * n]) - np.dot(gf[n:2 * n], gg[:n]))
