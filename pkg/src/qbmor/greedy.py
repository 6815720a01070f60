"""Adaptive greedy selection of interpolation-point pairs.

Each iteration enriches the subsystem bases at the current pair, scans the
sample grids for the frequencies maximizing delta1 and delta2, and stops
once delta1 + delta2 at the newly selected pair falls below the tolerance.
The combined bases V = orth[V1, V2], W = orth[W1, W2] then feed the final
Petrov-Galerkin reduction.
"""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import projection, transfer
from .error_bound import BoundEvaluator

__all__ = [
    "GreedyConfig",
    "TraceRow",
    "GreedyResult",
    "default_grid",
    "run_greedy",
    "reduce_final",
    "write_trace",
    "read_trace",
]


def default_grid(lo=1e0, hi=1e4, num=50, imag=False):
    """Logarithmically spaced sample frequencies; optionally on the imaginary axis.

    The default window starts at 1 rather than deep in the low-frequency
    range: lifted circuit models can carry an exactly singular linear part
    (auxiliary state rows proportional to physical ones), so sigma_min(sE - A)
    vanishes linearly as s -> 0 and the residual bounds blow up by 1/beta
    there even when the true error is tiny.  Pass lo explicitly to scan
    lower frequencies anyway.
    """
    pts = np.logspace(np.log10(lo), np.log10(hi), num).astype(complex)
    if imag:
        pts = np.concatenate([pts, 1j * pts])
    return pts


@dataclass
class GreedyConfig:
    sigma10: complex
    sigma20: complex
    S1: np.ndarray
    S2: np.ndarray
    eps_tol: float
    max_iters: int = 30
    validate_true_error: bool = False
    deflation_tol: float = projection.DEFLATION_TOL
    stagnation_window: int = 3

    def __post_init__(self):
        self.S1 = np.asarray(self.S1, dtype=complex)
        self.S2 = np.asarray(self.S2, dtype=complex)
        if self.S1.size == 0 or self.S2.size == 0:
            raise ValueError("sample grids must be nonempty")
        if not 0 < self.eps_tol < 1:
            raise ValueError("eps_tol must lie in (0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


@dataclass
class TraceRow:
    iter: int
    sigma1: complex
    sigma2: complex
    delta1_max: float
    delta2_max: float
    delta: float
    true_error_max: float | None
    basis_size_V: int
    basis_size_W: int
    wall_time: float


@dataclass
class GreedyResult:
    V: np.ndarray
    W: np.ndarray
    trace: list
    pairs: list
    converged: bool
    stagnated: bool = False
    # with validate_true_error set, one record per evaluated grid point and
    # iteration: (iter, "delta1"|"delta2", point, bound, true_error)
    validation: list = field(default_factory=list)


def _argmax_scan(values, candidates):
    """Index of the maximum; ties break toward the first index."""
    best, best_i = -np.inf, None
    for i, v in enumerate(values):
        if np.isfinite(v) and v > best:
            best, best_i = v, i
    if best_i is None:
        raise RuntimeError("no finite bound value on the sample grid")
    return best_i, best


def run_greedy(sys, cfg):
    """Greedy interpolation-point selection driven by delta1/delta2.

    Returns a GreedyResult carrying the combined bases, the per-iteration
    trace and the list of selected pairs.  Grid points whose bound
    evaluation fails (e.g. a generalized eigenvalue hit) are skipped with
    a warning; already-selected points are excluded from later scans.
    """
    solver = transfer.PencilSolver(sys)
    ev = BoundEvaluator(sys, solver)
    tol = cfg.deflation_tol
    n = sys.n
    V1 = W1 = V2 = W2 = np.zeros((n, 0))
    used1, used2 = set(), set()
    s1, s2 = complex(cfg.sigma10), complex(cfg.sigma20)
    trace, pairs, validation = [], [], []
    converged = stagnated = False
    stall = 0
    prev_delta = np.inf
    t0 = time.perf_counter()

    for it in range(1, cfg.max_iters + 1):
        pairs.append((s1, s2))
        used1.add(s1)
        used2.add(s2)

        # enrich subsystem-1 bases at the current sigma1
        V1, _ = projection.orth_extend(V1, transfer.solve_x1(sys, s1, solver), tol)
        W1, _ = projection.orth_extend(W1, transfer.solve_y1(sys, s1, solver), tol)
        ev.set_bases_1(V1, W1)

        rec1 = [] if cfg.validate_true_error else None
        s1_next, delta1_max, true1_max = _scan(
            ev.delta1, ev.true_error_1 if cfg.validate_true_error else None,
            cfg.S1, used1, rec1)

        # enrich subsystem-2 bases at the current pair
        v_new = np.column_stack([
            transfer.solve_x1(sys, s2, solver),
            transfer.solve_x2(sys, s1, s2, solver),
            transfer.solve_x1(sys, s1 + s2, solver),
        ])
        w_new = np.column_stack([
            transfer.solve_y1(sys, s1 + s2, solver),
            transfer.solve_y2(sys, s1, s2, solver),
            transfer.solve_y2(sys, s2, s1, solver),
        ])
        V2, _ = projection.orth_extend(V2, v_new, tol)
        W2, _ = projection.orth_extend(W2, w_new, tol)
        ev.set_bases_2(V2, W2)

        rec2 = [] if cfg.validate_true_error else None
        s2_next, delta2_max, true2_max = _scan(
            lambda s: ev.delta2(s1_next, s),
            (lambda s: ev.true_error_2(s1_next, s)) if cfg.validate_true_error else None,
            cfg.S2, used2, rec2)
        if cfg.validate_true_error:
            validation.extend((it, "delta1", s, b, t) for s, b, t in rec1)
            validation.extend((it, "delta2", (s1_next, s), b, t) for s, b, t in rec2)

        V, _ = projection.orth_extend(V1.copy(), V2, tol)
        W, _ = projection.orth_extend(W1.copy(), W2, tol)

        eps = delta1_max + delta2_max
        true_max = (true1_max + true2_max) if cfg.validate_true_error else None
        trace.append(TraceRow(
            iter=it, sigma1=s1, sigma2=s2,
            delta1_max=delta1_max, delta2_max=delta2_max, delta=eps,
            true_error_max=true_max,
            basis_size_V=V.shape[1], basis_size_W=W.shape[1],
            wall_time=time.perf_counter() - t0,
        ))

        if eps <= cfg.eps_tol:
            converged = True
            break
        if eps >= prev_delta:
            stall += 1
            if stall >= cfg.stagnation_window:
                stagnated = True
                warnings.warn(
                    f"greedy stagnated after {it} iterations (delta {eps:.3e})")
                break
        else:
            stall = 0
        prev_delta = eps
        s1, s2 = s1_next, s2_next

    V, W = projection.equalize_bases(sys, V, W, pairs, tol=tol, solver=solver)
    return GreedyResult(V=V, W=W, trace=trace, pairs=pairs,
                        converged=converged, stagnated=stagnated,
                        validation=validation)


def _scan(bound_fn, true_fn, grid, used, records=None):
    """Exhaustive grid scan; returns (argmax point, max bound, max true error).

    With true_fn given, also appends (point, bound, true_error) tuples to
    records for every point whose bound evaluation succeeded.
    """
    candidates = [s for s in grid if complex(s) not in used]
    if not candidates:
        candidates = list(grid)
    vals = []
    for s in candidates:
        try:
            vals.append(bound_fn(s))
        except np.linalg.LinAlgError:
            warnings.warn(f"skipping sample point {s}: singular pencil")
            vals.append(np.nan)
    i, best = _argmax_scan(vals, candidates)
    true_max = 0.0
    if true_fn is not None:
        for s, v in zip(candidates, vals):
            if np.isfinite(v):
                t = true_fn(s)
                true_max = max(true_max, t)
                if records is not None:
                    records.append((complex(s), v, t))
    return complex(candidates[i]), best, true_max


def reduce_final(sys, V, W, fallback_one_sided=True):
    """Build the reduced system from converged greedy bases.

    Falls back to one-sided projection (W := V) if W^T E V turns out
    numerically singular.
    """
    try:
        return projection.reduce(sys, V, W)
    except projection.SingularReductionError:
        if not fallback_one_sided:
            raise
        warnings.warn("W^T E V singular; falling back to one-sided projection")
        return projection.reduce(sys, V, V)


_TRACE_COLUMNS = [
    "iter", "sigma1_re", "sigma1_im", "sigma2_re", "sigma2_im",
    "delta1", "delta2", "delta", "true_error", "basis_V", "basis_W",
]


def write_trace(trace, path):
    """Serialize a greedy trace as CSV with 17-significant-digit floats."""
    fmt = "{:.17g}".format
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_TRACE_COLUMNS)
        for row in trace:
            writer.writerow([
                row.iter,
                fmt(row.sigma1.real), fmt(row.sigma1.imag),
                fmt(row.sigma2.real), fmt(row.sigma2.imag),
                fmt(row.delta1_max), fmt(row.delta2_max), fmt(row.delta),
                "" if row.true_error_max is None else fmt(row.true_error_max),
                row.basis_size_V, row.basis_size_W,
            ])


def read_trace(path):
    """Read a trace CSV back into TraceRow records."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(TraceRow(
                iter=int(rec["iter"]),
                sigma1=complex(float(rec["sigma1_re"]), float(rec["sigma1_im"])),
                sigma2=complex(float(rec["sigma2_re"]), float(rec["sigma2_im"])),
                delta1_max=float(rec["delta1"]),
                delta2_max=float(rec["delta2"]),
                delta=float(rec["delta"]),
                true_error_max=float(rec["true_error"]) if rec["true_error"] else None,
                basis_size_V=int(rec["basis_V"]),
                basis_size_W=int(rec["basis_W"]),
                wall_time=0.0,
            ))
    if not rows:
        raise ValueError(f"trace file {Path(path)} is empty")
    return rows
