"""Time integration tests: closed-form oracles, convergence orders, divergence."""

import numpy as np
import pytest
import scipy.sparse as sp

from qbmor import InputSignal, QBSystem
from qbmor.sim import (
    SimulationError,
    Trajectory,
    compare_outputs,
    integrate_implicit_euler,
    integrate_rk4,
    simulate_qb,
)
from conftest import scalar_qb


def _linear_scalar(e=1.0, a=1.0):
    return QBSystem.from_operators(
        np.array([[e]]), np.array([[-a]]), np.zeros((1, 1)),
        sp.csr_matrix((1, 1)), np.array([1.0]), np.array([1.0]))


class TestClosedFormOracles:
    def test_resonant_linear_response(self):
        # x' = -x + e^{-t}, x(0)=0  =>  x(t) = t e^{-t}
        sys = _linear_scalar()
        u = InputSignal("exp_decay")
        t_end, dt = 2.0, 1e-4
        traj = simulate_qb(sys, u, t_end, dt, scheme="rk4")
        exact = traj.times * np.exp(-traj.times)
        assert np.max(np.abs(traj.outputs - exact)) <= 1e-9

    def test_descriptor_mass_scaling(self):
        # 2 x' = -x  =>  x(t) = x0 e^{-t/2}
        sys = _linear_scalar(e=2.0)
        traj = simulate_qb(sys, InputSignal("zero"), 1.0, 1e-4,
                           scheme="rk4", x0=np.array([3.0]))
        assert np.isclose(traj.outputs[-1], 3.0 * np.exp(-0.5), rtol=1e-8)

    def test_logistic_quadratic_dynamics(self):
        # x' = x - x^2, x(0) = 1/2  =>  x(t) = 1/(1 + e^{-t})
        sys = QBSystem.from_operators(
            np.eye(1), np.array([[1.0]]), np.zeros((1, 1)),
            sp.csr_matrix(np.array([[-1.0]])), np.array([0.0]), np.array([1.0]))
        traj = simulate_qb(sys, InputSignal("zero"), 3.0, 1e-3,
                           scheme="rk4", x0=np.array([0.5]))
        exact = 1.0 / (1.0 + np.exp(-traj.times))
        assert np.max(np.abs(traj.outputs - exact)) <= 1e-10

    def test_bilinear_term(self):
        # x' = (-1 + u) x with u = e^{-t}  =>  x = x0 exp(-t + 1 - e^{-t})
        sys = QBSystem.from_operators(
            np.eye(1), np.array([[-1.0]]), np.array([[1.0]]),
            sp.csr_matrix((1, 1)), np.array([0.0]), np.array([1.0]))
        traj = simulate_qb(sys, InputSignal("exp_decay"), 2.0, 1e-4,
                           scheme="rk4", x0=np.array([1.0]))
        t = traj.times
        exact = np.exp(-t + 1.0 - np.exp(-t))
        assert np.max(np.abs(traj.outputs - exact)) <= 1e-9


class TestConvergenceOrders:
    def _errors(self, scheme, dts):
        sys = scalar_qb(a=1.0, q=0.3, nu=0.2)
        u = InputSignal("exp_decay")
        errs = []
        ref = simulate_qb(sys, u, 1.0, 1e-5, scheme="rk4", x0=np.array([0.1]))
        for dt in dts:
            traj = simulate_qb(sys, u, 1.0, dt, scheme=scheme, x0=np.array([0.1]))
            errs.append(abs(traj.outputs[-1] - ref.outputs[-1]))
        return errs

    def test_implicit_euler_first_order(self):
        e1, e2 = self._errors("implicit_euler", [1e-2, 5e-3])
        assert 1.6 <= e1 / e2 <= 2.4  # halving dt halves the error

    def test_rk4_fourth_order(self):
        e1, e2 = self._errors("rk4", [2e-2, 1e-2])
        assert 12.0 <= e1 / e2 <= 20.0


class TestSchemesAgree:
    def test_both_schemes_same_trajectory(self):
        sys = scalar_qb(a=2.0, q=0.4, nu=0.1)
        u = InputSignal("exp_decay")
        rk = simulate_qb(sys, u, 1.0, 1e-4, scheme="rk4", x0=np.array([0.2]))
        ie = simulate_qb(sys, u, 1.0, 1e-4, scheme="implicit_euler",
                         x0=np.array([0.2]))
        assert np.max(np.abs(rk.outputs - ie.outputs)) <= 1e-3


class TestErrorHandling:
    def test_unknown_scheme(self):
        with pytest.raises(ValueError, match="unknown scheme"):
            simulate_qb(scalar_qb(), InputSignal("zero"), 1.0, 0.1, scheme="euler")

    def test_rk4_needs_invertible_mass(self):
        n = 2
        E = np.array([[1.0, 0.0], [0.0, 0.0]])  # genuinely differential-algebraic
        A = -np.eye(n)
        sys = QBSystem.from_operators(E, A, np.zeros((n, n)),
                                      sp.csr_matrix((n, n * n)),
                                      np.ones(n), np.ones(n))
        with pytest.raises(SimulationError, match="invertible E"):
            simulate_qb(sys, InputSignal("zero"), 1.0, 0.1, scheme="rk4")

    def test_divergence_truncates_and_flags(self):
        # x' = x^2 from x(0)=1 blows up at t=1
        sys = QBSystem.from_operators(
            np.eye(1), np.array([[-1e-12]]), np.zeros((1, 1)),
            sp.csr_matrix(np.array([[1.0]])), np.array([0.0]), np.array([1.0]))
        traj = simulate_qb(sys, InputSignal("zero"), 2.0, 1e-3, scheme="rk4",
                           x0=np.array([1.0]), divergence_limit=1e3)
        assert traj.meta["diverged"]
        assert traj.times[-1] < 2.0
        assert len(traj.times) == len(traj.outputs)


class TestGenericIntegrators:
    def test_rk4_exponential(self):
        times, xs = integrate_rk4(lambda t, x: -x, np.array([1.0]), 1.0, 1e-3)
        assert np.isclose(xs[-1, 0], np.exp(-1.0), rtol=1e-10)

    def test_implicit_euler_with_and_without_jacobian(self):
        f = lambda t, x: -x + x**2 / 10
        jac = lambda t, x: np.diag(-1 + x / 5)
        _, xs_fd = integrate_implicit_euler(f, np.array([1.0]), 1.0, 1e-2)
        _, xs_an = integrate_implicit_euler(f, np.array([1.0]), 1.0, 1e-2, jac=jac)
        assert np.allclose(xs_fd, xs_an, rtol=1e-6)


class TestCompareOutputs:
    def test_identical_trajectories(self):
        t = np.linspace(0, 1, 11)
        a = Trajectory(times=t, outputs=np.sin(t))
        res = compare_outputs(a, Trajectory(times=t, outputs=np.sin(t)))
        assert res["max_abs"] == 0.0 and res["max_rel"] == 0.0

    def test_relative_error_normalized_by_peak(self):
        t = np.linspace(0, 1, 5)
        full = Trajectory(times=t, outputs=np.array([0.0, 1.0, 2.0, 1.0, 0.0]))
        rom = Trajectory(times=t, outputs=np.array([0.0, 1.0, 2.2, 1.0, 0.0]))
        res = compare_outputs(full, rom)
        assert np.isclose(res["max_rel"], 0.1)

    def test_grid_mismatch_rejected(self):
        a = Trajectory(times=np.linspace(0, 1, 5), outputs=np.zeros(5))
        b = Trajectory(times=np.linspace(0, 2, 5), outputs=np.zeros(5))
        with pytest.raises(ValueError, match="different time grids"):
            compare_outputs(a, b)

    def test_length_mismatch_needs_divergence_flag(self):
        t = np.linspace(0, 1, 11)
        a = Trajectory(times=t, outputs=np.zeros(11))
        b = Trajectory(times=t[:6], outputs=np.zeros(6))
        with pytest.raises(ValueError, match="different lengths"):
            compare_outputs(a, b)
        b_flagged = Trajectory(times=t[:6], outputs=np.ones(6),
                               meta={"diverged": True})
        res = compare_outputs(a, b_flagged)
        assert res["max_abs"] == 1.0  # compared on the shared prefix
