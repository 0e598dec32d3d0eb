import numpy as np
import pytest

from paratuck2.algebraic import decompose
from paratuck2.als import AlsOptions, als_run, als_step, random_init, rebalance
from paratuck2.model import ParaTuck2Factors, random_instance, reconstruct
from paratuck2.tensor_core import frob_dist_sq

from conftest import crandn


def design_rows(T, f, which):
    """Dense least-squares system for one factor, built entry by entry.

    Returns (X, y, unpack) with T[i, j, k] = sum_p X[row, p] * theta[p].
    """
    A, B, F, G, H = f.astuple()
    n1, n2, n3 = T.shape
    rows, y = [], []
    for k in range(n3):
        for j in range(n2):
            for i in range(n1):
                y.append(T[i, j, k])
                if which == "A":
                    # unknowns: A row by row; one equation row per (i, j, k)
                    r = np.zeros((n1, 2), dtype=complex)
                    for a in range(2):
                        r[i, a] = sum(G[a, k] * F[a, b] * H[b, k] * B[j, b] for b in range(2))
                elif which == "F":
                    r = np.zeros((2, 2), dtype=complex)
                    for a in range(2):
                        for b in range(2):
                            r[a, b] = A[i, a] * G[a, k] * H[b, k] * B[j, b]
                elif which == "B":
                    r = np.zeros((n2, 2), dtype=complex)
                    for b in range(2):
                        r[j, b] = sum(A[i, a] * G[a, k] * F[a, b] * H[b, k] for a in range(2))
                elif which == "G":
                    r = np.zeros((2, n3), dtype=complex)
                    for a in range(2):
                        r[a, k] = sum(A[i, a] * F[a, b] * H[b, k] * B[j, b] for b in range(2))
                else:
                    r = np.zeros((2, n3), dtype=complex)
                    for b in range(2):
                        r[b, k] = sum(A[i, a] * G[a, k] * F[a, b] * B[j, b] for a in range(2))
                rows.append(r.ravel())
    return np.array(rows), np.array(y)


def normal_residual(X, y, x):
    g = X.conj().T @ (X @ x - y)
    return np.linalg.norm(g) / np.linalg.norm(X.conj().T @ y)


def test_subproblems_satisfy_normal_equations(rng):
    f0, T = random_instance((3, 4, 10), 2)
    T = T + 0.1 * crandn(rng, *T.shape)  # off-model, so residuals are nonzero
    f = ParaTuck2Factors(*(crandn(rng, *M.shape) for M in f0.astuple()))
    new = als_step(T, f)
    # updates run in the order A, F, B, G, H, each seeing the latest factors
    stages = [
        ("A", ParaTuck2Factors(f.A, f.B, f.F, f.G, f.H), new.A),
        ("F", ParaTuck2Factors(new.A, f.B, f.F, f.G, f.H), new.F),
        ("B", ParaTuck2Factors(new.A, f.B, new.F, f.G, f.H), new.B),
        ("G", ParaTuck2Factors(new.A, new.B, new.F, f.G, f.H), new.G),
        ("H", ParaTuck2Factors(new.A, new.B, new.F, new.G, f.H), new.H),
    ]
    for which, ctx, solved in stages:
        X, y = design_rows(T, ctx, which)
        assert normal_residual(X, y, solved.ravel()) <= 1e-10, which
        x_ref = np.linalg.solve(X.conj().T @ X, X.conj().T @ y)
        np.testing.assert_allclose(solved.ravel(), x_ref, rtol=1e-8, atol=1e-10)


def test_truth_is_stationary():
    f, T = random_instance((5, 4, 10), 9)
    g = als_step(T, f)
    norm_sq = frob_dist_sq(T, 0 * T)
    assert frob_dist_sq(T, reconstruct(g)) <= 1e-24 * norm_sq
    assert frob_dist_sq(reconstruct(f), reconstruct(g)) <= 1e-24 * norm_sq


def test_truth_stationary_deterministic(det_factors, det_tensor):
    g = als_step(det_tensor, det_factors)
    assert frob_dist_sq(det_tensor, reconstruct(g)) <= 1e-18


def test_init_truth_converges_fast():
    f, T = random_instance((4, 4, 10), 1)
    _, trace = als_run(T, f, AlsOptions())
    assert trace.converged
    assert trace.iterations <= 2


def test_trace_length_one(det_tensor):
    _, trace = als_run(det_tensor, 0, AlsOptions(max_iters=1))
    assert trace.iterations == 1


def test_max_iters_validated():
    with pytest.raises(ValueError):
        AlsOptions(max_iters=0)


def test_refine_algebraic_output():
    _, T = random_instance((10, 10, 15), 4)
    f, diag = decompose(T)
    g, trace = als_run(T, f, AlsOptions(max_iters=1, rel_tol=0))
    # both sit at roundoff level; a sweep may move either way by 1e-12 absolute
    assert trace.errors[-1] <= trace.initial_error + 1e-12
    assert frob_dist_sq(T, reconstruct(g)) <= diag.residual_abs


def test_refine_deterministic(det_tensor):
    f, diag = decompose(det_tensor)
    _, trace = als_run(det_tensor, f, AlsOptions(max_iters=1, rel_tol=0))
    assert trace.initial_error == pytest.approx(diag.residual_abs, rel=1e-6)
    assert trace.errors[0] < trace.initial_error


def test_monotone_from_random_start(det_tensor):
    for seed in range(5):
        _, trace = als_run(det_tensor, seed, AlsOptions(max_iters=200))
        e = np.r_[trace.initial_error, trace.errors]
        assert np.all(np.diff(e) <= 1e-12)


def test_perturbed_start_converges():
    f, T = random_instance((4, 4, 10), 1)
    rng = np.random.default_rng(0)
    g = ParaTuck2Factors(*(M + 1e-3 * rng.standard_normal(M.shape) for M in f.astuple()))
    best, trace = als_run(T, g, AlsOptions(max_iters=2000))
    assert frob_dist_sq(T, reconstruct(best)) < 1e-6 * trace.initial_error


def test_random_init_reproducible_and_distinct():
    f1 = random_init((4, 5, 10), 3)
    f2 = random_init((4, 5, 10), 3)
    for M1, M2 in zip(f1.astuple(), f2.astuple()):
        assert M1.tobytes() == M2.tobytes()
    truth, _ = random_instance((4, 5, 10), 3)
    assert not np.allclose(f1.A, truth.A)


def test_best_factors_returned(det_tensor):
    best, trace = als_run(det_tensor, 1, AlsOptions(max_iters=50))
    assert frob_dist_sq(det_tensor, reconstruct(best)) == pytest.approx(min(trace.errors), rel=1e-9)


def test_rebalance_preserves_tensor(rng):
    f = ParaTuck2Factors(*(crandn(rng, *s) for s in [(3, 2), (4, 2), (2, 2), (2, 10), (2, 10)]))
    g = rebalance(f)
    np.testing.assert_allclose(np.linalg.norm(g.A, axis=0), 1)
    assert frob_dist_sq(reconstruct(f), reconstruct(g)) <= 1e-24 * frob_dist_sq(reconstruct(f), 0 * reconstruct(f))
    _, trace = als_run(reconstruct(f), 0, AlsOptions(max_iters=30, rebalance=True))
    e = np.r_[trace.initial_error, trace.errors]
    assert np.all(np.diff(e) <= 1e-12)


def test_rank_deficient_flag():
    # G row of zeros makes the A and F subproblems rank deficient
    f, T = random_instance((3, 3, 10), 0)
    z = ParaTuck2Factors(f.A, f.B, f.F, np.vstack([f.G[0], np.zeros(10)]), f.H)
    _, trace = als_run(T, z, AlsOptions(max_iters=1))
    assert trace.rank_deficient


def test_dims_mismatch(det_tensor):
    f, _ = random_instance((3, 3, 10), 0)
    with pytest.raises(ValueError):
        als_step(det_tensor, f)
