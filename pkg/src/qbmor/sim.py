"""Time integration of full and reduced QB systems plus output comparison.

Implicit Euler solves the per-step nonlinear equation by Newton iteration
with the analytic Jacobian E/dt - A - N u - 2 Q(x kron .); RK4 integrates
the explicit vector field E^{-1}(...) and therefore requires invertible E.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .qb_model import QBSystem, apply_quadratic

__all__ = [
    "Trajectory",
    "SimulationError",
    "simulate_qb",
    "integrate_rk4",
    "integrate_implicit_euler",
    "compare_outputs",
]

NEWTON_TOL = 1e-10
NEWTON_MAX_STEPS = 20


class SimulationError(RuntimeError):
    pass


@dataclass
class Trajectory:
    times: np.ndarray
    outputs: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.outputs = np.asarray(self.outputs, dtype=float)


def _quadratic_jacobian(Q, x):
    """Dense matrix of v -> 2 Q(x kron v) for symmetrized Q."""
    Qc = sp.coo_matrix(Q)
    n = Q.shape[0]
    j, k = Qc.col // n, Qc.col % n
    M = np.zeros((n, n))
    np.add.at(M, (Qc.row, k), Qc.data * x[j])
    return 2.0 * M


def _qb_rhs(sys, x, u):
    return sys.A @ x + (sys.N @ x) * u + apply_quadratic(sys.Q, x, x) + sys.B * u


def simulate_qb(sys, u, t_end, dt, scheme="implicit_euler",
                x0=None, divergence_limit=1e6):
    """Integrate a QB system; returns the output trajectory y = C x.

    The quadratic term is evaluated through the sparse Q without ever
    materializing x kron x as a matrix.  If |y| exceeds divergence_limit
    the run is truncated and flagged in the trajectory metadata.
    """
    if scheme not in ("implicit_euler", "rk4"):
        raise ValueError(f"unknown scheme {scheme!r}")
    x = np.array(sys.x0 if x0 is None else x0, dtype=float)
    nsteps = int(round(t_end / dt))
    times = np.arange(nsteps + 1) * dt
    ys = np.empty(nsteps + 1)
    ys[0] = sys.C @ x
    diverged = False

    if scheme == "rk4":
        # lu_factor only warns on an exactly singular matrix, so check first
        cond = np.linalg.cond(sys.E)
        if not np.isfinite(cond) or cond > 1e14:
            raise SimulationError("rk4 requires invertible E")
        elu = sla.lu_factor(sys.E)

        def f(t, x):
            return sla.lu_solve(elu, _qb_rhs(sys, x, float(u(t))))

    for k in range(nsteps):
        t_next = times[k + 1]
        if scheme == "rk4":
            t = times[k]
            k1 = f(t, x)
            k2 = f(t + dt / 2, x + dt / 2 * k1)
            k3 = f(t + dt / 2, x + dt / 2 * k2)
            k4 = f(t + dt, x + dt * k3)
            x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        else:
            x = _implicit_euler_step(sys, x, float(u(t_next)), dt, k)
        ys[k + 1] = sys.C @ x
        if abs(ys[k + 1]) > divergence_limit or not np.isfinite(ys[k + 1]):
            diverged = True
            times, ys = times[:k + 2], ys[:k + 2]
            break

    return Trajectory(times=times, outputs=ys, meta={
        "system": sys.name, "scheme": scheme, "dt": dt, "diverged": diverged,
    })


def _implicit_euler_step(sys, x, u_next, dt, step_index):
    scale = max(np.linalg.norm(sys.B) * abs(u_next), np.linalg.norm(x) / dt, 1.0)
    x_new = x.copy()
    for _ in range(NEWTON_MAX_STEPS):
        F = sys.E @ (x_new - x) / dt - _qb_rhs(sys, x_new, u_next)
        if np.linalg.norm(F) <= NEWTON_TOL * scale:
            return x_new
        J = (sys.E / dt - sys.A - sys.N * u_next
             - _quadratic_jacobian(sys.Q, x_new))
        x_new = x_new - np.linalg.solve(J, F)
    raise SimulationError(
        f"Newton failed to converge at step {step_index}; try a smaller dt")


def integrate_rk4(f, x0, t_end, dt):
    """Classic RK4 for x' = f(t, x); returns (times, states as rows)."""
    nsteps = int(round(t_end / dt))
    times = np.arange(nsteps + 1) * dt
    xs = np.empty((nsteps + 1, len(x0)))
    x = np.array(x0, dtype=float)
    xs[0] = x
    for k in range(nsteps):
        t = times[k]
        k1 = f(t, x)
        k2 = f(t + dt / 2, x + dt / 2 * k1)
        k3 = f(t + dt / 2, x + dt / 2 * k2)
        k4 = f(t + dt, x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        xs[k + 1] = x
    return times, xs


def integrate_implicit_euler(f, x0, t_end, dt, jac=None, fd_eps=1e-7):
    """Implicit Euler for x' = f(t, x) with Newton; numeric Jacobian fallback."""
    nsteps = int(round(t_end / dt))
    times = np.arange(nsteps + 1) * dt
    n = len(x0)
    xs = np.empty((nsteps + 1, n))
    x = np.array(x0, dtype=float)
    xs[0] = x
    eye = np.eye(n)
    for k in range(nsteps):
        t1 = times[k + 1]
        x_new = x.copy()
        for _ in range(NEWTON_MAX_STEPS):
            F = (x_new - x) / dt - f(t1, x_new)
            if np.linalg.norm(F) <= NEWTON_TOL * max(1.0, np.linalg.norm(x) / dt):
                break
            if jac is not None:
                Jf = jac(t1, x_new)
            else:
                Jf = np.empty((n, n))
                base = f(t1, x_new)
                for j in range(n):
                    xp = x_new.copy()
                    h = fd_eps * max(1.0, abs(xp[j]))
                    xp[j] += h
                    Jf[:, j] = (f(t1, xp) - base) / h
            x_new = x_new - np.linalg.solve(eye / dt - Jf, F)
        else:
            raise SimulationError(
                f"Newton failed to converge at step {k}; try a smaller dt")
        x = x_new
        xs[k + 1] = x
    return times, xs


def compare_outputs(full, rom):
    """Pointwise and maximum absolute/relative output errors.

    Relative error normalizes by the peak magnitude of the full output.
    Raises on mismatched time grids.
    """
    m = min(len(full.times), len(rom.times))
    if not np.array_equal(full.times[:m], rom.times[:m]):
        raise ValueError("trajectories use different time grids")
    if len(full.times) != len(rom.times) and not (
            full.meta.get("diverged") or rom.meta.get("diverged")):
        raise ValueError("trajectories have different lengths")
    y, yr = full.outputs[:m], rom.outputs[:m]
    abs_err = np.abs(y - yr)
    scale = max(np.max(np.abs(y)), 1e-300)
    rel_err = abs_err / scale
    return {
        "abs_err": abs_err,
        "rel_err": rel_err,
        "max_abs": float(np.max(abs_err)),
        "max_rel": float(np.max(rel_err)),
    }
