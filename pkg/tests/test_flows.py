"""
Tests for integration, characteristics, lifted comparison and energy diagnostics
"""

import math

import numpy as np
import pytest

from hj_toolkit.core.checks import rk4_error_ratio
from hj_toolkit.core.errors import SingularityGuardError, StepFailureError
from hj_toolkit.core.flows import (characteristics, compare_lifted, dissipation_diagnostic, integrate,
                                   parallel_map, rk4_step, solve, time_derivative)
from hj_toolkit.core.hamiltonian import parse_hamiltonian, parse_section
from hj_toolkit.core.systems import damped_hamiltonian, harmonic_hamiltonian, trig_hamiltonian, ws_hamiltonian
from hj_toolkit.models.geometry import ExtendedPoint, StructureKind
from hj_toolkit.models.trajectory import IntegratorConfig

from test_helpers import HARMONIC_SECTION, print_test_header, print_test_result

RK4 = IntegratorConfig(method="rk4", step=0.01)


class TestIntegrate:
    def test_harmonic_orbit_closes(self):
        trajectory = integrate(StructureKind.SYMPLECTIC, harmonic_hamiltonian(),
                               ExtendedPoint((1.0,), (0.0,), 0.0), (0.0, 2 * math.pi))
        assert np.max(np.abs(trajectory.states[-1] - [1.0, 0.0, 0.0])) < 1e-6
        assert trajectory.taus[0] == 0.0 and trajectory.taus[-1] == pytest.approx(2 * math.pi)
        assert len(trajectory) == IntegratorConfig().samples

    def test_free_particle(self):
        H = parse_hamiltonian("p1^2/2", 1)
        trajectory = integrate("symplectic", H, (0.0, 2.0, 0.0), 1.0)
        assert trajectory.final.q[0] == pytest.approx(2.0, abs=1e-9)

    def test_cosymplectic_time_advances_with_tau(self):
        trajectory = integrate(StructureKind.COSYMPLECTIC, ws_hamiltonian(1.0, "1"), (1.5, 0.2, 0.3), (0.0, 2.0))
        assert np.allclose(trajectory.s, 0.3 + trajectory.taus, atol=1e-12)

    def test_damped_energy_decays_exponentially(self):
        print_test_header("Damped oscillator decay law")
        trajectory = integrate(StructureKind.CONTACT, damped_hamiltonian(1.0, 0.1), (1.0, 1.0, 0.0), (0.0, 10.0),
                               diagnostics=False)
        h0 = trajectory.hamiltonian[0]
        measured = np.max(np.abs(trajectory.hamiltonian - h0 * np.exp(-0.1 * trajectory.taus))) / h0
        print_test_result(f"relative deviation {measured:.2e}", measured < 1e-6)
        assert measured < 1e-6
        assert trajectory.defect is None

    def test_rk4_fixed_reports_every_step(self):
        trajectory = integrate(StructureKind.SYMPLECTIC, harmonic_hamiltonian(), (1.0, 0.0, 0.0), (0.0, 1.0),
                               IntegratorConfig(method="rk4", step=0.3))
        # ceil(1/0.3) = 4 equal steps
        assert len(trajectory) == 5
        assert np.allclose(np.diff(trajectory.taus), 0.25)
        assert trajectory.taus[-1] == 1.0

    def test_rk4_order(self):
        assert 12.0 <= rk4_error_ratio() <= 20.0

    def test_rk4_step_is_exact_for_cubics(self):
        rhs = lambda tau, y: np.array([3.0 * tau ** 2])
        assert rk4_step(rhs, 1.0, np.array([1.0]), 0.5)[0] == pytest.approx(1.5 ** 3)

    def test_singularity_guard_reports_last_good_state(self):
        H = ws_hamiltonian(1.0, "1")
        with pytest.raises(SingularityGuardError) as info:
            integrate(StructureKind.COSYMPLECTIC, H, (1.0, -2.0, 0.0), (0.0, 2.0), IntegratorConfig(q_min=0.5))
        assert info.value.last_state[0] >= 0.5
        assert 0.0 <= info.value.tau < 2.0

    def test_guard_applies_to_fixed_step_too(self):
        H = ws_hamiltonian(1.0, "1")
        with pytest.raises(SingularityGuardError):
            integrate(StructureKind.COSYMPLECTIC, H, (1.0, -2.0, 0.0), (0.0, 2.0),
                      IntegratorConfig(method="rk4", step=0.01, q_min=0.5))

    def test_regular_systems_ignore_the_guard(self):
        trajectory = integrate(StructureKind.SYMPLECTIC, harmonic_hamiltonian(), (1.0, 0.0, 0.0), (0.0, 2.0),
                               IntegratorConfig(q_min=0.5))
        assert np.min(np.abs(trajectory.q)) < 0.5

    def test_step_budget(self):
        with pytest.raises(StepFailureError):
            integrate(StructureKind.SYMPLECTIC, harmonic_hamiltonian(), (1.0, 0.0, 0.0), (0.0, 1.0),
                      IntegratorConfig(method="rk4", step=0.01, max_steps=10))
        with pytest.raises(StepFailureError):
            integrate(StructureKind.SYMPLECTIC, harmonic_hamiltonian(), (1.0, 0.0, 0.0), (0.0, 10.0),
                      IntegratorConfig(max_steps=1))

    @pytest.mark.parametrize("span", [(1.0, 1.0), (2.0, 1.0), (0.0, math.inf), -1.0])
    def test_invalid_span(self, span):
        with pytest.raises(ValueError):
            integrate(StructureKind.SYMPLECTIC, harmonic_hamiltonian(), (1.0, 0.0, 0.0), span)

    def test_initial_point_dimension(self):
        with pytest.raises(ValueError):
            integrate(StructureKind.SYMPLECTIC, harmonic_hamiltonian(), (1.0, 0.0), 1.0)

    def test_solve_accepts_any_rhs(self):
        taus, states = solve(lambda tau, y: -y, [1.0], (0.0, 1.0), IntegratorConfig(samples=11))
        assert len(taus) == 11
        assert states[-1, 0] == pytest.approx(math.exp(-1.0), rel=1e-8)


class TestDiagnostics:
    def test_symplectic_conservation(self):
        H = harmonic_hamiltonian()
        trajectory = integrate(StructureKind.SYMPLECTIC, H, (1.0, 0.0, 0.0), (0.0, 100.0))
        assert np.max(trajectory.defect) < 1e-7

    def test_contact_law_along_damped_trajectory(self):
        trajectory = integrate(StructureKind.CONTACT, damped_hamiltonian(1.0, 0.1), (1.0, 1.0, 0.0), (0.0, 10.0))
        assert np.max(trajectory.defect) < 1e-6

    def test_cosymplectic_law_along_ws_trajectory(self):
        trajectory = integrate(StructureKind.COSYMPLECTIC, ws_hamiltonian(1.0, "1 + 0.1*t"), (1.0, 0.5, 0.0),
                               (0.0, 5.0))
        assert np.max(trajectory.defect) < 1e-6

    @pytest.mark.parametrize("kind", list(StructureKind))
    def test_zero_hamiltonian(self, kind):
        trajectory = integrate(kind, parse_hamiltonian("0", 1), (0.3, 0.4, 0.0), (0.0, 1.0))
        assert np.array_equal(dissipation_diagnostic(kind, trajectory, parse_hamiltonian("0", 1)),
                              np.zeros(len(trajectory)))

    def test_time_derivative_fourth_order(self):
        taus = np.linspace(0.0, 2.0, 201)
        assert np.max(np.abs(time_derivative(np.sin(taus), taus) - np.cos(taus))) < 1e-7

    def test_time_derivative_fallbacks(self):
        taus = np.array([0.0, 0.1, 0.3, 0.6, 1.0, 1.5])
        assert np.allclose(time_derivative(2.0 * taus, taus), 2.0)
        assert time_derivative(np.array([4.0]), np.array([0.0])).tolist() == [0.0]
        assert np.allclose(time_derivative(np.array([0.0, 1.0]), np.array([0.0, 0.5])), 2.0)


class TestCharacteristics:
    def test_ws_equilibrium_is_fixed(self):
        curve = characteristics(StructureKind.COSYMPLECTIC, ws_hamiltonian(1.0, "1"), [1.0], [0.0], 0.0, (0.0, 5.0))
        assert np.all(curve.q == 1.0)
        assert np.all(curve.p == 0.0)
        assert curve.label == "characteristics"

    def test_ws_matches_reeb_flow(self):
        H = ws_hamiltonian(1.0, "1")
        curve = characteristics(StructureKind.COSYMPLECTIC, H, [2.0], [0.0], 0.0, (0.0, 5.0), diagnostics=False)
        flow = integrate(StructureKind.COSYMPLECTIC, H, (2.0, 0.0, 0.0), (0.0, 5.0), diagnostics=False)
        assert np.max(np.abs(curve.states[:, :2] - flow.states[:, :2])) < 1e-8

    def test_trig_without_coupling_is_linear(self):
        curve = characteristics(StructureKind.COSYMPLECTIC, trig_hamiltonian(0.0, 1.0), [1.0], [0.0], 0.0, (0.0, 3.0))
        assert np.allclose(curve.q[:, 0], np.cos(curve.taus), atol=1e-7)
        assert np.allclose(curve.p[:, 0], -np.sin(curve.taus), atol=1e-7)

    def test_initial_data_dimension(self):
        with pytest.raises(ValueError):
            characteristics(StructureKind.COSYMPLECTIC, harmonic_hamiltonian(), [1.0, 2.0], [0.0], 0.0, 1.0)


class TestCompareLifted:
    def test_classical_solution_tracks_full_flow(self):
        gamma = parse_section(HARMONIC_SECTION, 1, {"E": 2.0})
        result = compare_lifted(StructureKind.COSYMPLECTIC, harmonic_hamiltonian(), gamma, ([0.0], 0.0), (0.0, 1.0))
        assert result.max_point_deviation < 1e-6
        assert result.lifted.states[0].tolist() == result.full.states[0].tolist()
        assert len(result.deviations) == len(result.lifted)

    def test_zero_hamiltonian(self):
        result = compare_lifted(StructureKind.CONTACT, parse_hamiltonian("0", 1), parse_section("q1", 1),
                                ([0.5], 0.0), (0.0, 1.0))
        assert result.max_point_deviation == 0.0

    def test_non_solution_drifts(self):
        result = compare_lifted(StructureKind.COSYMPLECTIC, parse_hamiltonian("0.5*p1^2", 1), parse_section("q1", 1),
                                ([1.0], 0.0), (0.0, 1.0), RK4)
        # lifted q = e^tau, full q = 1 + tau
        assert result.max_point_deviation > 1e-3
        assert result.lifted.q[-1, 0] == pytest.approx(math.e, rel=1e-6)
        assert result.full.q[-1, 0] == pytest.approx(2.0, rel=1e-9)


def test_parallel_map_keeps_input_order():
    items = list(range(50))
    square = lambda k: k * k
    assert parallel_map(square, items, workers=1) == parallel_map(square, items, workers=4) == [k * k for k in items]
    assert parallel_map(square, [], workers=4) == []
