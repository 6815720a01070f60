"""Petrov-Galerkin projection bases and reduced-system construction.

Bases are orthonormal real n x r arrays.  Complex candidate vectors are
realified (split into real and imaginary parts) before orthogonalization,
which keeps all reduced operators real; conjugate points need no extra
columns since re/im spans already cover them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .qb_model import QBSystem, symmetrize_quadratic
from . import transfer

__all__ = [
    "DEFLATION_TOL",
    "SingularReductionError",
    "orth_extend",
    "build_interpolation_bases",
    "reduce",
    "ReducedQBSystem",
    "verify_hermite",
]

DEFLATION_TOL = 1e-8


class SingularReductionError(np.linalg.LinAlgError):
    """W^T E V is numerically singular, so no reduced system exists."""


def empty_basis(n):
    return np.zeros((n, 0))


def _realify(vectors):
    """Split complex columns into real/imaginary parts; returns a real n x m array."""
    vectors = np.asarray(vectors)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    cols = []
    for j in range(vectors.shape[1]):
        v = vectors[:, j]
        cols.append(v.real)
        if np.iscomplexobj(v) and np.linalg.norm(v.imag) > 0:
            cols.append(v.imag)
    return np.column_stack(cols) if cols else np.zeros((vectors.shape[0], 0))


def orth_extend(basis, new_vectors, tol=DEFLATION_TOL):
    """Extend an orthonormal basis by new (possibly complex) vectors.

    Modified Gram-Schmidt with one reorthogonalization pass; a candidate
    whose residual drops below tol times its original norm is deflated.
    Returns (basis, number_of_columns_added).
    """
    candidates = _realify(new_vectors)
    if basis is None:
        basis = np.zeros((candidates.shape[0], 0))
    added = 0
    for w in candidates.T:
        nrm0 = np.linalg.norm(w)
        if nrm0 == 0.0:
            continue
        w = w / nrm0
        for _ in range(2):
            if basis.shape[1]:
                w = w - basis @ (basis.T @ w)
        nrm = np.linalg.norm(w)
        if nrm < tol:
            continue
        basis = np.column_stack([basis, w / nrm])
        added += 1
    return basis, added


def build_interpolation_bases(sys, pairs, tol=DEFLATION_TOL, solver=None):
    """Interpolation bases for a list of frequency-point pairs.

    For each pair (s1, s2), V gains x1(s1), x1(s2), x2(s1,s2) and W gains
    y1(s1+s2), y2(s1,s2), y2(s2,s1); with s1 == s2 this degenerates to the
    equal-point spans {x1(s), x2(s,s)} / {y1(2s), y2(s,s)}.
    """
    if solver is None:
        solver = transfer.PencilSolver(sys)
    V = empty_basis(sys.n)
    W = empty_basis(sys.n)
    for s1, s2 in pairs:
        vs = [
            transfer.solve_x1(sys, s1, solver),
            transfer.solve_x1(sys, s2, solver),
            transfer.solve_x2(sys, s1, s2, solver),
        ]
        ws = [
            transfer.solve_y1(sys, s1 + s2, solver),
            transfer.solve_y2(sys, s1, s2, solver),
            transfer.solve_y2(sys, s2, s1, solver),
        ]
        V, _ = orth_extend(V, np.column_stack(vs), tol)
        W, _ = orth_extend(W, np.column_stack(ws), tol)
    return equalize_bases(sys, V, W, pairs, tol=tol, solver=solver)


def equalize_bases(sys, V, W, pairs, tol=DEFLATION_TOL, solver=None, seed=0):
    """Grow the smaller of V, W until both have the same column count.

    Realified interpolation spans rarely balance, but the Hermite
    conditions survive any span enlargement, so the thinner basis is
    padded: V with primal states at the pair sums, W with dual states at
    the individual points, then deterministic random complements as a
    last resort.  Equal counts are required for a square reduced pencil.
    """
    if V.shape[1] == W.shape[1]:
        return V, W
    if solver is None:
        solver = transfer.PencilSolver(sys)
    v_pads = iter([s1 + s2 for s1, s2 in pairs])
    w_pads = iter([s for pair in pairs for s in pair])
    rng = np.random.default_rng(seed)
    while V.shape[1] != W.shape[1]:
        if V.shape[1] < W.shape[1]:
            s = next(v_pads, None)
            cand = (transfer.solve_x1(sys, s, solver) if s is not None
                    else rng.standard_normal(sys.n))
            V, _ = orth_extend(V, cand, tol)
        else:
            s = next(w_pads, None)
            cand = (transfer.solve_y1(sys, s, solver) if s is not None
                    else rng.standard_normal(sys.n))
            W, _ = orth_extend(W, cand, tol)
    return V, W


@dataclass(frozen=True)
class ReducedQBSystem:
    """Projected operator tuple together with the bases that produced it."""

    Er: np.ndarray
    Ar: np.ndarray
    Nr: np.ndarray
    Qr: sp.csr_matrix
    Br: np.ndarray
    Cr: np.ndarray
    V: np.ndarray
    W: np.ndarray

    @property
    def r(self):
        return self.Ar.shape[0]

    def as_system(self, x0=None, name="rom"):
        """Reduced operators packaged as a QBSystem (for transfer/sim reuse)."""
        if x0 is None:
            x0 = np.zeros(self.r)
        return QBSystem.from_operators(
            self.Er, self.Ar, self.Nr, self.Qr, self.Br, self.Cr,
            x0=x0, name=name,
        )


def reduce(sys, V, W=None):
    """Project a system onto span(V) along span(W) (Petrov-Galerkin).

    Qr is assembled column-pair-wise through the sparse Q and symmetrized
    afterwards so ROM simulation uses the same conventions as the full model.
    """
    if W is None:
        W = V
    n, r = V.shape
    if W.shape != (n, r):
        raise ValueError("V and W must have identical shapes")
    Er = W.T @ sys.E @ V
    if r:
        cond = np.linalg.cond(Er)
        if not np.isfinite(cond) or cond > 1e14:
            raise SingularReductionError(
                f"W^T E V numerically singular (cond estimate {cond:.3e})"
            )
    Ar = W.T @ sys.A @ V
    Nr = W.T @ sys.N @ V
    Br = W.T @ sys.B
    Cr = sys.C @ V
    Qr = np.empty((r, r * r))
    for a in range(r):
        block = sys.Q @ np.kron(V[:, a][:, None], V)
        Qr[:, a * r:(a + 1) * r] = W.T @ block
    Qr = symmetrize_quadratic(sp.csr_matrix(Qr))
    return ReducedQBSystem(Er=Er, Ar=Ar, Nr=Nr, Qr=Qr, Br=Br, Cr=Cr, V=V, W=W)


def verify_hermite(sys, rom, pairs):
    """Hermite interpolation mismatches of a ROM at the given point pairs.

    Checks, per pair (s1, s2): H1 at s1, s2 and s1+s2; H2 at (s1, s2);
    dH2/ds1 at (s1, s2); dH2/ds2 at (s2, s1).  Returns a list of records
    with absolute and relative mismatches (report only, nothing raised).
    """
    rsys = rom.as_system()
    fsolver = transfer.PencilSolver(sys)
    rsolver = transfer.PencilSolver(rsys)
    report = []

    def record(pair, condition, full, red):
        err = abs(full - red)
        report.append({
            "pair": pair,
            "condition": condition,
            "full": full,
            "reduced": red,
            "abs_err": err,
            "rel_err": err / max(abs(full), 1e-300),
        })

    for s1, s2 in pairs:
        pair = (s1, s2)
        record(pair, "H1(s1)", transfer.H1(sys, s1, fsolver), transfer.H1(rsys, s1, rsolver))
        record(pair, "H1(s2)", transfer.H1(sys, s2, fsolver), transfer.H1(rsys, s2, rsolver))
        record(pair, "H1(s1+s2)",
               transfer.H1(sys, s1 + s2, fsolver), transfer.H1(rsys, s1 + s2, rsolver))
        record(pair, "H2(s1,s2)",
               transfer.H2(sys, s1, s2, fsolver), transfer.H2(rsys, s1, s2, rsolver))
        record(pair, "dH2/ds1(s1,s2)",
               transfer.dH2(sys, s1, s2, 1, fsolver), transfer.dH2(rsys, s1, s2, 1, rsolver))
        record(pair, "dH2/ds2(s2,s1)",
               transfer.dH2(sys, s2, s1, 2, fsolver), transfer.dH2(rsys, s2, s1, 2, rsolver))
    return report
