"""Greedy selection loop tests: convergence, validity, determinism, trace I/O."""

import dataclasses

import numpy as np
import pytest

from qbmor import greedy, projection
from qbmor.greedy import GreedyConfig, default_grid, read_trace, run_greedy, write_trace
from conftest import random_qb


def _config(**kw):
    base = dict(sigma10=1.0, sigma20=1.0, S1=default_grid(0.1, 100, 20),
                S2=default_grid(0.1, 100, 20), eps_tol=1e-6, max_iters=15)
    base.update(kw)
    return GreedyConfig(**base)


class TestConfigValidation:
    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            _config(S1=np.array([]))

    def test_eps_tol_range(self):
        with pytest.raises(ValueError, match="eps_tol"):
            _config(eps_tol=1.5)
        with pytest.raises(ValueError, match="eps_tol"):
            _config(eps_tol=0.0)

    def test_max_iters_positive(self):
        with pytest.raises(ValueError, match="max_iters"):
            _config(max_iters=0)


def test_default_grid_shape_and_range():
    g = default_grid()
    assert len(g) == 50
    assert np.isclose(g[0], 1e0) and np.isclose(g[-1], 1e4)
    gi = default_grid(imag=True)
    assert len(gi) == 100
    assert np.all(gi[50:].real == 0)


def test_converges_on_random_system_and_bound_dominates(rng):
    sys = random_qb(30, rng)
    cfg = _config(validate_true_error=True)
    res = run_greedy(sys, cfg)
    assert res.converged
    assert res.trace[-1].delta <= cfg.eps_tol
    # the reported bound dominates the true error at every evaluated point
    for it, kind, point, bound, true in res.validation:
        assert true <= bound * (1 + 1e-10) + 1e-14, \
            f"{kind} at {point} (iter {it}): true {true:.3e} > bound {bound:.3e}"
    # and the trace delta dominates the max true error per iteration
    for row in res.trace:
        assert row.true_error_max <= row.delta * (1 + 1e-10) + 1e-14


def test_deterministic_traces(rng):
    sys = random_qb(20, rng)
    cfg = _config()
    t1 = [dataclasses.astuple(r)[:-1] for r in run_greedy(sys, cfg).trace]
    t2 = [dataclasses.astuple(r)[:-1] for r in run_greedy(sys, cfg).trace]
    assert t1 == t2  # exact float equality, wall time excluded


def test_selected_points_not_revisited(rng):
    sys = random_qb(20, rng)
    res = run_greedy(sys, _config(eps_tol=1e-12, max_iters=6))
    s1s = [p[0] for p in res.pairs]
    assert len(set(s1s)) == len(s1s)


def test_final_bases_are_balanced_and_orthonormal(rng):
    sys = random_qb(20, rng)
    res = run_greedy(sys, _config(max_iters=4, eps_tol=1e-12))
    V, W = res.V, res.W
    assert V.shape == W.shape
    assert np.allclose(V.T @ V, np.eye(V.shape[1]), atol=1e-10)
    assert np.allclose(W.T @ W, np.eye(W.shape[1]), atol=1e-10)


def test_reduce_final_interpolates_selected_pairs(rng):
    sys = random_qb(25, rng)
    res = run_greedy(sys, _config(max_iters=3, eps_tol=1e-13))
    rom = greedy.reduce_final(sys, res.V, res.W)
    report = projection.verify_hermite(sys, rom, res.pairs)
    assert max(r["rel_err"] for r in report) <= 1e-7


def test_nonconvergence_flagged(rng):
    sys = random_qb(20, rng)
    res = run_greedy(sys, _config(eps_tol=1e-14, max_iters=2))
    assert not res.converged
    assert len(res.trace) <= 2


def test_trace_round_trip(tmp_path, rng):
    sys = random_qb(15, rng)
    res = run_greedy(sys, _config(max_iters=3, eps_tol=1e-13,
                                  validate_true_error=True))
    path = tmp_path / "trace.csv"
    write_trace(res.trace, path)
    back = read_trace(path)
    assert len(back) == len(res.trace)
    for a, b in zip(res.trace, back):
        assert a.sigma1 == b.sigma1 and a.sigma2 == b.sigma2
        assert a.delta == b.delta  # 17 significant digits survive the trip
        assert a.true_error_max == b.true_error_max
        assert a.basis_size_V == b.basis_size_V


def test_read_trace_rejects_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("iter,sigma1_re,sigma1_im,sigma2_re,sigma2_im,"
                    "delta1,delta2,delta,true_error,basis_V,basis_W\n")
    with pytest.raises(ValueError, match="empty"):
        read_trace(path)
