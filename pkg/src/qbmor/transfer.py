"""First- and second-order symmetric transfer functions of a QB system.

All quantities derive from resolvent solves with the pencil G(s) = sE - A:

    x1(s)      = G(s)^{-1} B
    y1(s)      = G(s)^{-T} C^T
    x2(s1,s2)  = G(s1+s2)^{-1} B2(s1,s2)
    y2(s1,s2)  = G(s1)^{-T} c2(s1,s2)

    H1(s)      = C x1(s)
    H2(s1,s2)  = C x2(s1,s2)

with B2(s1,s2) = Q(x1(s1) kron x1(s2)) + N(x1(s1)+x1(s2))/2 and
c2(s1,s2) = Q2(x1(s2) kron y1(s1+s2)) + N^T y1(s1+s2)/2 built from the
mode-2 matricization Q2.  Transposes are plain (non-conjugated) throughout.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .qb_model import QBSystem, apply_quadratic

__all__ = [
    "PencilSolver",
    "solve_x1",
    "solve_y1",
    "rhs_B2",
    "solve_x2",
    "solve_y2",
    "H1",
    "H2",
    "dH2",
]

_RESIDUAL_TOL = 1e-10


class PencilSolver:
    """LU factorizations of sE - A, cached by the exact complex value of s.

    One factorization serves both x1-type solves and transposed y1-type
    solves at the same frequency.
    """

    def __init__(self, sys: QBSystem):
        self.sys = sys
        self._lu = {}
        self._q2 = None

    def _factor(self, s):
        key = complex(s)
        fac = self._lu.get(key)
        if fac is None:
            G = key * self.sys.E - self.sys.A
            try:
                fac = sla.lu_factor(G)
            except sla.LinAlgError as exc:
                raise np.linalg.LinAlgError(
                    f"pencil sE - A singular at s = {key}"
                ) from exc
            self._lu[key] = fac
        return fac

    def solve(self, s, b):
        """Solve (sE - A) x = b."""
        b = np.asarray(b, dtype=complex)
        x = sla.lu_solve(self._factor(s), b)
        if __debug__:
            G = complex(s) * self.sys.E - self.sys.A
            nb = np.linalg.norm(b)
            if nb > 0:
                assert np.linalg.norm(G @ x - b) <= _RESIDUAL_TOL * nb, \
                    f"solve at s={s} lost accuracy"
        return x

    def solve_t(self, s, b):
        """Solve (sE - A)^T x = b (plain transpose)."""
        return sla.lu_solve(self._factor(s), np.asarray(b, dtype=complex), trans=1)

    @property
    def q2(self):
        if self._q2 is None:
            self._q2 = self.sys.mode2()
        return self._q2


def _solver(sys, solver):
    return solver if solver is not None else PencilSolver(sys)


def solve_x1(sys, s, solver=None):
    """Primal subsystem-1 state x1(s) = (sE - A)^{-1} B."""
    return _solver(sys, solver).solve(s, sys.B)


def solve_y1(sys, s, solver=None):
    """Dual subsystem-1 state y1(s) = (sE - A)^{-T} C^T."""
    return _solver(sys, solver).solve_t(s, sys.C)


def rhs_B2(sys, s1, s2, solver=None):
    """Right-hand side of the second subsystem, symmetric in (s1, s2)."""
    solver = _solver(sys, solver)
    x1a = solve_x1(sys, s1, solver)
    x1b = solve_x1(sys, s2, solver)
    return apply_quadratic(sys.Q, x1a, x1b) + 0.5 * (sys.N @ (x1a + x1b))


def solve_x2(sys, s1, s2, solver=None):
    """Primal subsystem-2 state x2(s1,s2) = ((s1+s2)E - A)^{-1} B2(s1,s2)."""
    solver = _solver(sys, solver)
    return solver.solve(s1 + s2, rhs_B2(sys, s1, s2, solver))


def solve_y2(sys, s1, s2, solver=None):
    """Dual subsystem-2 state y2(s1,s2) = (s1 E - A)^{-T} c2(s1,s2)."""
    solver = _solver(sys, solver)
    y1s = solve_y1(sys, s1 + s2, solver)
    x1b = solve_x1(sys, s2, solver)
    c2 = apply_quadratic(solver.q2, x1b, y1s) + 0.5 * (sys.N.T @ y1s)
    return solver.solve_t(s1, c2)


def H1(sys, s, solver=None):
    """First-order transfer function C (sE - A)^{-1} B."""
    return sys.C @ solve_x1(sys, s, solver)


def H2(sys, s1, s2, solver=None):
    """Second-order symmetric transfer function C x2(s1, s2)."""
    return sys.C @ solve_x2(sys, s1, s2, solver)


def dH2(sys, s1, s2, which, solver=None):
    """Partial derivative of H2 with respect to argument `which` (1 or 2).

    Both partials share the term -y1(s1+s2)^T E x2(s1,s2); they coincide
    at s1 = s2.
    """
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    solver = _solver(sys, solver)
    y1s = solve_y1(sys, s1 + s2, solver)
    x2 = solve_x2(sys, s1, s2, solver)
    common = -(y1s @ (sys.E @ x2))
    if which == 1:
        x1 = solve_x1(sys, s1, solver)
        y2 = solve_y2(sys, s1, s2, solver)
    else:
        x1 = solve_x1(sys, s2, solver)
        y2 = solve_y2(sys, s2, s1, solver)
    return common - x1 @ (sys.E.T @ y2)
