"""
Contract and oracle checks over seeded random points, trajectories and closed forms
"""

import math
import sys
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..models.geometry import StructureKind
from ..models.trajectory import IntegratorConfig
from .flows import characteristics, compare_lifted, integrate, parallel_map
from .hamiltonian import HamiltonianFunction, closedness_defect, parse_hamiltonian, parse_section
from .hj import hj_residual, relatedness_defect
from .structures import contract_check
from .systems import (PinneySpec, damped_hamiltonian, harmonic_hamiltonian, pinney_residual,
                      pinney_solution, trig_hamiltonian, ws_hamiltonian)

DEFAULT_SEED = 20240

CONTACT_ENERGY_SYSTEMS = (
    ("0.5*p1^2 + 0.5*q1^2 + 0.1*S", 1, (1.0, 1.0, 0.0)),
    ("0.5*p1^2 + 0.5*q1^2 + 0.05*S^2", 1, (1.0, 0.5, 0.2)),
    ("0.5*p1^2 + 0.5*q1^2*(1 + 0.1*S)", 1, (0.8, -0.3, 0.1)),
    ("0.5*(p1^2 + p2^2) + 0.5*(q1^2 + 4*q2^2) + 0.1*S", 2, (1.0, 0.5, 0.0, 0.5, 0.0)),
    ("0.5*p1^2 - cos(q1) + 0.2*sin(S)", 1, (0.5, 0.5, 0.0)),
)


@dataclass
class CheckResult:
    """One row of the check table

    `passed` is None for values that are reported without a threshold.
    """
    name: str
    measured: float
    threshold: Optional[float]
    passed: Optional[bool]
    detail: str = ""

    def as_row(self) -> List[str]:
        threshold = "-" if self.threshold is None else f"{self.threshold:.0e}"
        status = "reported" if self.passed is None else ("pass" if self.passed else "FAIL")
        return [self.name, f"{self.measured:.3e}", threshold, status, self.detail]


def _result(name: str, measured: float, threshold: float, detail: str = "") -> CheckResult:
    return CheckResult(name, float(measured), threshold, bool(measured < threshold), detail)


def random_polynomial_hamiltonian(rng: np.random.Generator, terms: int = 4, degree: int = 3) -> HamiltonianFunction:
    """A random n=1 polynomial in q1, p1, S with coefficients on a 1e-3 grid"""
    monomials = []
    for _ in range(terms):
        coefficient = round(float(rng.uniform(-1.0, 1.0)), 3)
        powers = rng.integers(0, degree + 1, size=3)
        factors = [f"({coefficient})"]
        for name, power in zip(("q1", "p1", "S"), powers):
            if power == 1:
                factors.append(name)
            elif power > 1:
                factors.append(f"{name}^{int(power)}")
        monomials.append("*".join(factors))
    return parse_hamiltonian(" + ".join(monomials), 1, name="random polynomial")


def random_points(rng: np.random.Generator, count: int, q_range: Tuple[float, float] = (-2.0, 2.0),
                  p_range: Tuple[float, float] = (-2.0, 2.0), s_range: Tuple[float, float] = (-1.0, 1.0)) -> np.ndarray:
    """count x 3 array of (q, p, s) drawn uniformly"""
    return np.column_stack([rng.uniform(*q_range, size=count),
                            rng.uniform(*p_range, size=count),
                            rng.uniform(*s_range, size=count)])


class ContractSuite:
    """Runs the contract, energy-law, HJ and closed-form checks"""

    def __init__(self, seed: int = DEFAULT_SEED, points: int = 1000, workers: int = 1, verbose: bool = False):
        """Initialize the suite

        Args:
            seed: Seed for every random draw; check i uses the stream (seed, i)
            points: Random points per Hamiltonian in the pointwise contract checks
            workers: Threads running checks concurrently
            verbose: Print progress to stderr
        """
        self.seed = int(seed)
        self.points = int(points)
        self.workers = max(1, int(workers))
        self.verbose = verbose
        self.checks: List[Tuple[str, Callable[[np.random.Generator], List[CheckResult]]]] = [
            ("contact identity", self.check_contact_identity),
            ("cosymplectic reeb", self.check_cosymplectic_reeb),
            ("dissipation law", self.check_dissipation_law),
            ("contact energy law", self.check_contact_energy_law),
            ("cosymplectic energy law", self.check_cosymplectic_energy_law),
            ("hj equivalence", self.check_hj_equivalence),
            ("hj oracle", self.check_hj_oracle),
            ("pinney", self.check_pinney),
            ("characteristics", self.check_characteristics),
            ("rk4 order", self.check_rk4_order),
        ]

    def run(self) -> List[CheckResult]:
        """Run all checks; results come back in a fixed order whatever the worker count"""
        indexed = list(enumerate(self.checks))
        progress = tqdm(total=len(indexed), desc="checks", file=sys.stderr, disable=not self.verbose)

        def run_one(item):
            index, (name, check) = item
            rng = np.random.default_rng([self.seed, index])
            rows = check(rng)
            progress.update(1)
            return rows

        try:
            batches = parallel_map(run_one, indexed, self.workers)
        finally:
            progress.close()
        results = [row for batch in batches for row in batch]
        if self.verbose:
            failed = [r.name for r in results if r.passed is False]
            if failed:
                print(f"❌ {len(failed)} check(s) failed: {', '.join(failed)}", file=sys.stderr)
            else:
                print(f"✅ All {len(results)} checks passed or reported", file=sys.stderr)
        return results

    def _contract_defects(self, kind: StructureKind, H: HamiltonianFunction, points: np.ndarray) -> Tuple[float, bool]:
        worst = 0.0
        eta_exact = True
        for x in points:
            report = contract_check(kind, H, x)
            worst = max(worst, report.relative_defect())
            if kind is StructureKind.COSYMPLECTIC:
                eta_exact = eta_exact and report.eta_pairing == 1.0
        return worst, eta_exact

    def check_contact_identity(self, rng: np.random.Generator) -> List[CheckResult]:
        systems = [damped_hamiltonian(1.0, 0.1)] + [random_polynomial_hamiltonian(rng) for _ in range(10)]
        worst = 0.0
        for H in systems:
            defect, _ = self._contract_defects(StructureKind.CONTACT, H, random_points(rng, self.points))
            worst = max(worst, defect)
        return [_result("contact eta(X_H) + H", worst, 1e-12, f"{len(systems)} Hamiltonians")]

    def check_cosymplectic_reeb(self, rng: np.random.Generator) -> List[CheckResult]:
        cases = [(ws_hamiltonian(1.0, "1"), (0.5, 2.0)), (trig_hamiltonian(1.0, 1.0), (-2.0, 2.0))]
        cases += [(random_polynomial_hamiltonian(rng), (-2.0, 2.0)) for _ in range(10)]
        worst = 0.0
        eta_exact = True
        for H, q_range in cases:
            defect, exact = self._contract_defects(StructureKind.COSYMPLECTIC, H,
                                                   random_points(rng, self.points, q_range=q_range))
            worst = max(worst, defect)
            eta_exact = eta_exact and exact
        return [
            CheckResult("cosymplectic <dt, R_H> = 1", 0.0 if eta_exact else 1.0, None, eta_exact, "exact equality"),
            _result("cosymplectic iota_R Omega_H", worst, 1e-12, f"{len(cases)} Hamiltonians"),
        ]

    def check_dissipation_law(self, rng: np.random.Generator) -> List[CheckResult]:
        H = damped_hamiltonian(1.0, 0.1)
        trajectory = integrate(StructureKind.CONTACT, H, (1.0, 1.0, 0.0), (0.0, 10.0), IntegratorConfig(),
                               diagnostics=False)
        h0 = trajectory.hamiltonian[0]
        expected = h0 * np.exp(-0.1 * trajectory.taus)
        measured = float(np.max(np.abs(trajectory.hamiltonian - expected)) / abs(h0))
        return [_result("damped H(tau) = H(0) exp(-alpha tau)", measured, 1e-6)]

    def check_contact_energy_law(self, rng: np.random.Generator) -> List[CheckResult]:
        worst = 0.0
        for text, n, x0 in CONTACT_ENERGY_SYSTEMS:
            H = parse_hamiltonian(text, n)
            trajectory = integrate(StructureKind.CONTACT, H, x0, (0.0, 5.0), IntegratorConfig())
            worst = max(worst, float(np.max(trajectory.defect)))
        return [_result("contact dH/dtau + H dH/dS", worst, 1e-6, f"{len(CONTACT_ENERGY_SYSTEMS)} systems")]

    def check_cosymplectic_energy_law(self, rng: np.random.Generator) -> List[CheckResult]:
        H = ws_hamiltonian(1.0, "1 + 0.1*t")
        trajectory = integrate(StructureKind.COSYMPLECTIC, H, (1.0, 0.5, 0.0), (0.0, 5.0), IntegratorConfig())
        return [_result("cosymplectic dH/dtau - dH/dt", float(np.max(trajectory.defect)), 1e-6, "ws, omega = 1 + 0.1 t")]

    def check_hj_equivalence(self, rng: np.random.Generator) -> List[CheckResult]:
        pairs = [
            (StructureKind.COSYMPLECTIC, harmonic_hamiltonian(), parse_section("sqrt(2*E - q1^2)", 1, {"E": 2.0}),
             (-1.5, 1.5), None),
            (StructureKind.CONTACT, damped_hamiltonian(1.0, 0.1), parse_section("q1*S + 1", 1), (-1.5, 1.5), None),
            (StructureKind.CONTACT,
             parse_hamiltonian("0.5*(p1^2 + p2^2) + 0.5*(q1^2 + q2^2) + 0.1*S", 2),
             parse_section(["2*q1*q2", "q1^2"], 2), (-1.0, 1.0), 0.3),
        ]
        worst = 0.0
        for kind, H, gamma, (q_lo, q_hi), q2 in pairs:
            for q in np.linspace(q_lo, q_hi, 50):
                for s in np.linspace(0.0, 1.0, 50):
                    base = [q] if q2 is None else [q, q2]
                    if closedness_defect(gamma, base, s) >= 1e-10:
                        continue
                    report = relatedness_defect(kind, H, gamma, base, s)
                    worst = max(worst, abs(report.relatedness_defect - report.residual_norm))
        return [_result("relatedness = |HJ residual|", worst, 1e-9, "3 pairs on 50x50 grids")]

    def check_hj_oracle(self, rng: np.random.Generator) -> List[CheckResult]:
        H = harmonic_hamiltonian()
        gamma = parse_section("sqrt(2*E - q1^2)", 1, {"E": 2.0})
        residual = max(abs(hj_residual(StructureKind.COSYMPLECTIC, H, gamma, [q], 0.0)[0])
                       for q in np.linspace(-1.9, 1.9, 201))
        comparison = compare_lifted(StructureKind.COSYMPLECTIC, H, gamma, ([0.0], 0.0), (0.0, 1.0), IntegratorConfig())
        return [
            _result("harmonic sqrt(2E - q^2) residual", residual, 1e-10),
            _result("harmonic lifted vs full deviation", comparison.max_point_deviation, 1e-6),
        ]

    def check_pinney(self, rng: np.random.Generator) -> List[CheckResult]:
        ts = np.linspace(0.0, 10.0, 101)
        worst = 0.0
        for _ in range(20):
            A, C = rng.uniform(0.5, 2.0, size=2)
            B = rng.uniform(-0.5, 0.5) * math.sqrt(A * C)
            spec = PinneySpec(k=1.0, A=float(A), B=float(B), C=float(C)).rescaled()
            worst = max(worst, float(np.max(pinney_residual(spec, ts))))
        equilibrium = PinneySpec(k=1.0, A=1.0, B=0.0, C=1.0)
        drift = max(abs(pinney_solution(equilibrium, t) - 1.0) for t in ts)
        symmetric = PinneySpec(k=1.0, form="symmetric", C1=1.0, C2=1.0, branch=1)
        symmetric_residual = float(np.max(pinney_residual(symmetric, ts)))
        return [
            _result("pinney classical residual", worst, 1e-6, "20 random triples"),
            _result("pinney equilibrium q = 1", drift, 1e-9),
            CheckResult("pinney symmetric-form residual", symmetric_residual, None, None, "C1 = C2 = 1, + branch"),
        ]

    def check_characteristics(self, rng: np.random.Generator) -> List[CheckResult]:
        H = ws_hamiltonian(1.0, "1")
        cfg = IntegratorConfig()
        curve = characteristics(StructureKind.COSYMPLECTIC, H, [2.0], [0.0], 0.0, (0.0, 5.0), cfg, diagnostics=False)
        flow = integrate(StructureKind.COSYMPLECTIC, H, (2.0, 0.0, 0.0), (0.0, 5.0), cfg, diagnostics=False)
        deviation = float(np.max(np.abs(curve.states[:, :2] - flow.states[:, :2])))
        return [_result("ws characteristics vs Reeb flow", deviation, 1e-8)]

    def check_rk4_order(self, rng: np.random.Generator) -> List[CheckResult]:
        ratio = rk4_error_ratio()
        return [CheckResult("rk4 error ratio under step halving", ratio, None, bool(12.0 <= ratio <= 20.0),
                            "expected in [12, 20]")]


def rk4_error_ratio(h: float = 0.1, span: float = 1.0) -> float:
    """Final-point error of rk4-fixed at h over the error at h/2 on the harmonic oscillator from (1, 0)"""
    H = harmonic_hamiltonian()
    exact = np.array([math.cos(span), -math.sin(span), 0.0])
    errors = []
    for step in (h, h / 2.0):
        trajectory = integrate(StructureKind.SYMPLECTIC, H, (1.0, 0.0, 0.0), (0.0, span),
                               IntegratorConfig(method="rk4", step=step), diagnostics=False)
        errors.append(float(np.max(np.abs(trajectory.states[-1] - exact))))
    return errors[0] / errors[1]


def run_contract_suite(seed: int = DEFAULT_SEED, workers: int = 1, verbose: bool = False,
                       points: int = 1000) -> List[CheckResult]:
    """Run every check with the given seed"""
    return ContractSuite(seed=seed, points=points, workers=workers, verbose=verbose).run()


def all_passed(results: Sequence[CheckResult]) -> bool:
    return all(r.passed is not False for r in results)
