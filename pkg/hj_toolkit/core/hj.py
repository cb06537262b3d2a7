"""
Geometric Hamilton-Jacobi constructions for a section gamma

All H-partials are taken at the lifted point (q, gamma(q, s), s).
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..models.geometry import BaseTangent, HJReport, StructureKind, TangentValue
from .errors import TimeDependenceError
from .hamiltonian import HamiltonianFunction, Section, closedness_defect
from .numerics import grad
from .structures import TIME_DEPENDENCE_TOLERANCE, field_from_gradient


@dataclass
class LiftedData:
    """Everything the residuals need at one lifted point"""
    coords: np.ndarray
    gamma: np.ndarray
    dgamma_dq: np.ndarray  # [j, i] = d gamma^j / d q^i
    dgamma_ds: np.ndarray
    dH_dq: np.ndarray
    dH_dp: np.ndarray
    dH_ds: float
    h_value: float
    gradient: np.ndarray


def lifted_data(H: HamiltonianFunction, gamma: Section, q: Sequence[float], s: float) -> LiftedData:
    if H.n != gamma.n:
        raise ValueError(f"Hamiltonian has n={H.n} but section has n={gamma.n}")
    n = H.n
    q = [float(v) for v in q]
    p = np.array(gamma(q, s))
    coords = np.concatenate([q, p, [float(s)]])
    dgamma_dq, dgamma_ds = gamma.jacobian(q, s)
    g = grad(H, coords)
    return LiftedData(coords=coords, gamma=p, dgamma_dq=dgamma_dq, dgamma_ds=dgamma_ds,
                      dH_dq=g[:n], dH_dp=g[n:2 * n], dH_ds=float(g[2 * n]),
                      h_value=H(coords), gradient=g)


def tangent_lift(gamma: Section, q: Sequence[float], s: float, v: BaseTangent) -> TangentValue:
    """T gamma applied to a base tangent vector

    dp_j = sum_i (d gamma^j/d q^i) v.dq_i + (d gamma^j/d s) v.ds
    """
    if v.n != gamma.n:
        raise ValueError(f"Tangent vector has n={v.n} but section has n={gamma.n}")
    dq, ds = gamma.jacobian(q, s)
    dp = dq @ np.asarray(v.dq) + ds * v.ds
    return TangentValue(v.dq, tuple(dp), v.ds)


def _full_field(kind: StructureKind, data: LiftedData) -> np.ndarray:
    if kind is StructureKind.SYMPLECTIC and abs(data.dH_ds) >= TIME_DEPENDENCE_TOLERANCE:
        raise TimeDependenceError(data.dH_ds, data.coords)
    return field_from_gradient(kind, data.gradient, data.coords, data.h_value)


def projected_field(kind: StructureKind, H: HamiltonianFunction, gamma: Section,
                    q: Sequence[float], s: float) -> BaseTangent:
    """T pi o field o gamma: the full field at the lifted point with the dp part dropped"""
    kind = StructureKind.parse(kind)
    data = lifted_data(H, gamma, q, s)
    full = _full_field(kind, data)
    return BaseTangent(tuple(full[:H.n]), float(full[-1]))


def hj_residual_cosymplectic(H: HamiltonianFunction, gamma: Section, q: Sequence[float], s: float) -> np.ndarray:
    """Per j: d gamma^j/ds + sum_i dH/dp_i d gamma^j/dq^i + dH/dq^j"""
    d = lifted_data(H, gamma, q, s)
    return d.dgamma_ds + d.dgamma_dq @ d.dH_dp + d.dH_dq


def hj_residual_contact(H: HamiltonianFunction, gamma: Section, q: Sequence[float], s: float,
                        frozen_ds: Optional[float] = None) -> np.ndarray:
    """Per j: gamma^j dH/ds + dH/dq^j + (sum_i gamma^i dH/dp_i - H) d gamma^j/ds + sum_i dH/dp_i d gamma^j/dq^i

    Args:
        frozen_ds: If given, replaces every d gamma^j/ds by this constant
    """
    d = lifted_data(H, gamma, q, s)
    dgamma_ds = d.dgamma_ds if frozen_ds is None else np.full(H.n, float(frozen_ds))
    s_rate = float(np.dot(d.gamma, d.dH_dp)) - d.h_value
    return d.gamma * d.dH_ds + d.dH_dq + s_rate * dgamma_ds + d.dgamma_dq @ d.dH_dp


def hj_residual_symplectic(H: HamiltonianFunction, gamma: Section, q: Sequence[float], s: float = 0.0) -> np.ndarray:
    """Per j: sum_i dH/dp_i d gamma^j/dq^i + dH/dq^j (time-independent equation)"""
    d = lifted_data(H, gamma, q, s)
    if abs(d.dH_ds) >= TIME_DEPENDENCE_TOLERANCE:
        raise TimeDependenceError(d.dH_ds, d.coords)
    return d.dgamma_dq @ d.dH_dp + d.dH_dq


def hamiltonian_on_section_gradient(H: HamiltonianFunction, gamma: Section, q: Sequence[float], s: float = 0.0) -> np.ndarray:
    """d(H o gamma)/dq^j = dH/dq^j + sum_i dH/dp_i d gamma^i/dq^j

    Agrees with hj_residual_symplectic wherever gamma is closed.
    """
    d = lifted_data(H, gamma, q, s)
    return d.dH_dq + d.dgamma_dq.T @ d.dH_dp


def hj_residual(kind: StructureKind, H: HamiltonianFunction, gamma: Section, q: Sequence[float], s: float,
                frozen_ds: Optional[float] = None) -> np.ndarray:
    kind = StructureKind.parse(kind)
    if kind is StructureKind.COSYMPLECTIC:
        return hj_residual_cosymplectic(H, gamma, q, s)
    if kind is StructureKind.CONTACT:
        return hj_residual_contact(H, gamma, q, s, frozen_ds=frozen_ds)
    return hj_residual_symplectic(H, gamma, q, s)


def relatedness_defect(kind: StructureKind, H: HamiltonianFunction, gamma: Section,
                       q: Sequence[float], s: float) -> HJReport:
    """Compare T gamma(projected field) with the full field at the lifted point

    Returns:
        HJReport: max-norm of the difference, the HJ residual of the
            structure and the closedness defect of gamma at (q, s)
    """
    kind = StructureKind.parse(kind)
    data = lifted_data(H, gamma, q, s)
    n = H.n
    full = _full_field(kind, data)
    base_dq, base_ds = full[:n], full[-1]
    lifted = np.concatenate([base_dq, data.dgamma_dq @ base_dq + data.dgamma_ds * base_ds, [base_ds]])
    difference = lifted - full
    return HJReport(residual=hj_residual(kind, H, gamma, q, s).tolist(),
                    relatedness_defect=float(np.max(np.abs(difference))),
                    closedness_defect=closedness_defect(gamma, q, s),
                    difference=difference.tolist())
