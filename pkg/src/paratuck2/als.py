"""Alternating least squares for the ParaTuck-2 model.

One sweep updates ``A``, ``F``, ``B``, ``G`` and ``H`` in this order, each by
the exact (minimum-norm) least-squares fit of the model with the other four
factors held fixed:

* ``A``: ``[T_1 ... T_K] = A [M_1 ... M_K]`` with ``M_k = D_k(G) F D_k(H) B^T``;
* ``F``: ``vec(T_k) = (B D_k(H) kron A D_k(G)) vec(F)`` stacked over ``k``;
* ``B``: as ``A`` on the transposed slices;
* ``G[:, k]``: ``vec(T_k) = khatri_rao(W_k^T, A) G[:, k]`` with ``W_k = F D_k(H) B^T``;
* ``H[:, k]``: ``vec(T_k) = khatri_rao(B, Z_k) H[:, k]`` with ``Z_k = A D_k(G) F``.
"""
from dataclasses import dataclass, field

import numpy as np

from .linalg_kit import lstsq
from .model import ParaTuck2Factors, random_factors
from .tensor_core import as_tensor

# mixed into the seed so that random inits never coincide with
# random_instance draws for the same integer seed
_INIT_STREAM = 0x414C53


@dataclass
class AlsOptions:
    max_iters: int = 5000
    rel_tol: float = 1e-14
    abs_tol: float = 1e-28
    seed: int = 0
    rebalance: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass
class AlsTrace:
    """``errors[i]`` is the squared error after sweep ``i + 1``."""

    initial_error: float
    errors: list = field(default_factory=list)
    converged: bool = False
    rank_deficient: bool = False

    @property
    def iterations(self):
        return len(self.errors)


def random_init(dims, seed):
    """Standard normal factors for a random start."""
    return random_factors(dims, np.random.default_rng([_INIT_STREAM, seed]))


class _Slices:
    """Slice arrangements of ``T`` reused by every sweep."""

    def __init__(self, T):
        n1, n2, K = T.shape
        kji = np.ascontiguousarray(np.transpose(T, (2, 1, 0)))
        self.kij = np.ascontiguousarray(np.transpose(T, (2, 0, 1)))
        self.rhs_A = kji.reshape(K * n2, n1)
        self.rhs_B = self.kij.reshape(K * n1, n2)
        self.rhs_F = kji.reshape(-1)
        self.rhs_GH = kji.reshape(K, n2 * n1)


def _sweep_arrays(S, A, B, F, G, H):
    K = G.shape[1]
    deficient = False

    # A: T_k^T = (B D_k(H) F^T D_k(G)) A^T
    BH = B[None, :, :] * H.T[:, None, :]
    Mt = (BH @ F.T) * G.T[:, None, :]
    X, d = lstsq(Mt.reshape(-1, Mt.shape[-1]), S.rhs_A)
    A = X.T
    deficient |= d

    # F: vec(T_k) = kron(B D_k(H), A D_k(G)) vec(F)
    AG = A[None, :, :] * G.T[:, None, :]
    KR = (BH[:, :, None, :, None] * AG[:, None, :, None, :]).reshape(-1, F.size)
    x, d = lstsq(KR, S.rhs_F)
    F = x.reshape(F.shape[1], F.shape[0]).T
    deficient |= d

    # B: T_k = (A D_k(G) F D_k(H)) B^T
    Nt = (AG @ F) * H.T[:, None, :]
    X, d = lstsq(Nt.reshape(-1, Nt.shape[-1]), S.rhs_B)
    B = X.T
    deficient |= d

    # G[:, k]: vec(T_k) = khatri_rao(W_k^T, A) g_k
    Wt = B[None, :, :] * H.T[:, None, :] @ F.T
    KR = (Wt[:, :, None, :] * A[None, None, :, :]).reshape(K, -1, A.shape[1])
    x, d = lstsq(KR, S.rhs_GH)
    G = x.T
    deficient |= d

    # H[:, k]: vec(T_k) = khatri_rao(B, Z_k) h_k
    Z = (A[None, :, :] * G.T[:, None, :]) @ F
    KR = (B[None, :, None, :] * Z[:, None, :, :]).reshape(K, -1, B.shape[1])
    x, d = lstsq(KR, S.rhs_GH)
    H = x.T
    deficient |= d
    return (A, B, F, G, H), deficient


def _error(S, A, B, F, G, H):
    AG = A[None, :, :] * G.T[:, None, :]
    BH = B[None, :, :] * H.T[:, None, :]
    D = (AG @ F) @ np.swapaxes(BH, 1, 2) - S.kij
    return float(np.vdot(D, D).real)


def _sweep(T, f):
    parts, deficient = _sweep_arrays(_Slices(T), *f.astuple())
    return ParaTuck2Factors(*parts), deficient


def als_step(T, f):
    """One full ALS sweep; returns the updated factors."""
    T = as_tensor(T)
    if f.dims != T.shape:
        raise ValueError(f"factor dims {f.dims} do not match tensor {T.shape}")
    return _sweep(T, f)[0]


def rebalance(f):
    """Normalize the columns of ``A`` and ``B``, pushing the scale into ``G`` and ``H``."""
    A, B, F, G, H = f.astuple()
    na = np.linalg.norm(A, axis=0)
    nb = np.linalg.norm(B, axis=0)
    na = np.where(na > 0, na, 1.0)
    nb = np.where(nb > 0, nb, 1.0)
    return ParaTuck2Factors(A / na, B / nb, F, G * na[:, None], H * nb[:, None])


def als_run(T, init=None, opts=None):
    """Run ALS sweeps from ``init``.

    ``init`` is a :class:`ParaTuck2Factors`, an integer seed for a random
    start, or ``None`` to use ``opts.seed``.  Iteration stops after
    ``opts.max_iters`` sweeps, when the relative improvement of a sweep drops
    below ``opts.rel_tol``, or when the error falls below
    ``opts.abs_tol * ||T||^2``.

    Returns
    -------
    factors : ParaTuck2Factors
        The best factors seen, the starting point included.
    trace : AlsTrace
    """
    T = as_tensor(T)
    opts = opts or AlsOptions()
    if init is None:
        init = opts.seed
    if isinstance(init, (int, np.integer)):
        f = random_init(T.shape, int(init))
    else:
        f = init.copy()
        if f.dims != T.shape:
            raise ValueError(f"factor dims {f.dims} do not match tensor {T.shape}")

    S = _Slices(T)
    norm_sq = float(np.vdot(T.ravel(), T.ravel()).real)
    parts = f.astuple()
    err = _error(S, *parts)
    trace = AlsTrace(initial_error=err)
    best, best_err = parts, err
    for _ in range(opts.max_iters):
        parts, deficient = _sweep_arrays(S, *parts)
        if opts.rebalance:
            parts = rebalance(ParaTuck2Factors(*parts)).astuple()
        trace.rank_deficient |= deficient
        new_err = _error(S, *parts)
        trace.errors.append(new_err)
        if new_err < best_err:
            best, best_err = parts, new_err
        if new_err <= opts.abs_tol * norm_sq:
            trace.converged = True
            break
        if opts.rel_tol > 0 and err - new_err < opts.rel_tol * err:
            trace.converged = True
            break
        err = new_err
    return ParaTuck2Factors(*best), trace
