"""Algebraic rank-(2, 2) ParaTuck-2 decomposition.

The pipeline (:func:`decompose`):

1. compress ``T`` to a ``2 x 2 x N3`` tensor ``Tc`` with a truncated HOSVD
   and rescale its two modes by their singular values;
2. stack the degree-2 Veronese embeddings of the slices of ``Tc`` into the
   ``10 x N3`` matrix ``Phi``;
3. take ``theta`` from the left kernel of ``Phi``;
4. fold ``theta`` into a ``3 x 3`` matrix, which is rank one for a model
   tensor;
5. read the rows of the inverse factors off the roots of the two quadratics
   generated by its rank-one factors;
6. strip ``A`` and ``B`` and split the core into ``F``, ``G``, ``H`` with
   rank-one factorizations of slice ratios.
"""
from dataclasses import asdict, dataclass, field
import warnings

import numpy as np

from . import linalg_kit
from .errors import (
    DegeneratePivotError,
    NotDecomposableError,
    NotRankOneError,
    ParaTuckError,
    RankDeficientError,
    SingularRecoveryError,
    UnderdeterminedError,
)
from .model import ParaTuck2Factors, reconstruct, relative_error
from .tensor_core import as_matrix, as_tensor, contract, frob_dist_sq, unfold

RANK_DEFICIENT_TOL = 1e-13
RANK_ONE_TOL = 1e-6
KERNEL_TOL = 1e-8
KERNEL_GAP_WARN = 10.0
PIVOT_TOL = 1e-12
GENERATOR_SEPARATION_TOL = 1e-10
MIN_SLICES = 10


class AmbiguousKernelWarning(UserWarning):
    """The smallest two singular values of ``Phi`` are not well separated."""


@dataclass
class CompressedTensor:
    Tc: np.ndarray
    Ac: np.ndarray
    Bc: np.ndarray
    ratio_mode1: float
    ratio_mode2: float

    def expand(self):
        return contract(contract(self.Tc, self.Ac, 1), self.Bc, 2)


@dataclass
class ThetaVector:
    theta: np.ndarray
    sigma_min: float
    sigma_max: float
    gap: float

    @property
    def ambiguous(self):
        return self.gap < KERNEL_GAP_WARN

    @property
    def kernel_ratio(self):
        return self.sigma_min / self.sigma_max if self.sigma_max > 0 else 0.0


@dataclass
class GeneratorPairs:
    alpha: tuple
    beta: tuple
    rank_one_ratio: float = 0.0


@dataclass
class CoreFactors:
    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    pivot: int
    max_slice_ratio: float


# -- compression ------------------------------------------------------------

def hosvd_compress(T):
    """Truncated HOSVD of multilinear rank ``(2, 2, N3)``.

    ``Ac`` and ``Bc`` are the two leading left singular vectors of the mode-1
    and mode-2 unfoldings; ``Tc = T x1 Ac^H x2 Bc^H``.  The ratios
    ``sigma_3 / sigma_2`` of both unfoldings are returned as rank
    diagnostics (zero when there is no third singular value).
    """
    T = as_tensor(T)
    if T.shape[0] < 2 or T.shape[1] < 2:
        raise ValueError(f"N1 and N2 must be at least 2, got {T.shape}")
    bases = []
    ratios = []
    for mode in (1, 2):
        svd = linalg_kit.compact_svd(unfold(T, mode))
        s = svd.sigma
        if s[0] == 0 or s[1] < RANK_DEFICIENT_TOL * s[0]:
            raise RankDeficientError(
                f"mode-{mode} unfolding has rank < 2 "
                f"(sigma2/sigma1 = {s[1] / s[0] if s[0] else 0.0:.3e})"
            )
        bases.append(svd.U[:, :2])
        ratios.append(float(s[2] / s[1]) if s.size > 2 else 0.0)
    Ac, Bc = bases
    Tc = contract(contract(T, Ac.conj().T, 1), Bc.conj().T, 2)
    return CompressedTensor(Tc, Ac, Bc, ratios[0], ratios[1])


def balance_compressed(Tc):
    """Scale the modes of ``Tc`` so both unfoldings have comparable rows.

    Returns ``(Tb, d1, d2)`` with ``Tc = Tb x1 diag(d1) x2 diag(d2)``.  A
    diagonal rescaling keeps the ParaTuck-2 structure, and ``Phi`` squares
    the spread of the entries of ``Tc``, so balancing keeps its kernel well
    separated when the compressed factors have nearly parallel columns.
    """
    d1 = linalg_kit.compact_svd(unfold(Tc, 1)).sigma[:2]
    d2 = linalg_kit.compact_svd(unfold(Tc, 2)).sigma[:2]
    if d1[-1] <= 0 or d2[-1] <= 0:
        raise RankDeficientError("compressed tensor has a zero mode singular value")
    Tb = contract(contract(Tc, np.diag(1 / d1), 1), np.diag(1 / d2), 2)
    return Tb, d1, d2


# -- structured matrix and its kernel ---------------------------------------

def _entries(M):
    # column-major naming: t1 = M11, t2 = M21, t3 = M12, t4 = M22
    M = as_matrix(M, (2, 2))
    return M[0, 0], M[1, 0], M[0, 1], M[1, 1]


def veronese_phi(M):
    """Degree-2 Veronese embedding of a 2x2 matrix into C^10."""
    t1, t2, t3, t4 = _entries(M)
    return np.array([
        t1 * t1, t2 * t2, t3 * t3, t4 * t4,
        t1 * t2, t1 * t3, t1 * t4, t2 * t3, t2 * t4, t3 * t4,
    ])


def theta_map(U, V):
    """Symmetric bilinear companion of :func:`veronese_phi`.

    ``theta_map(U, V) . veronese_phi(T) == <U, T> <V, T>`` with the bilinear
    (unconjugated) pairing ``<U, T> = sum U_ij T_ij``.
    """
    u1, u2, u3, u4 = _entries(U)
    v1, v2, v3, v4 = _entries(V)
    return np.array([
        u1 * v1, u2 * v2, u3 * v3, u4 * v4,
        u1 * v2 + u2 * v1, u1 * v3 + u3 * v1, u1 * v4 + u4 * v1,
        u2 * v3 + u3 * v2, u2 * v4 + u4 * v2, u3 * v4 + u4 * v3,
    ])


def build_phi_matrix(Tc):
    """``10 x N3`` matrix whose columns are the embeddings of the slices of ``Tc``."""
    Tc = as_tensor(Tc)
    if Tc.shape[:2] != (2, 2):
        raise ValueError(f"expected a 2 x 2 x N3 tensor, got {Tc.shape}")
    n3 = Tc.shape[2]
    if n3 < MIN_SLICES:
        raise UnderdeterminedError(
            f"N3 = {n3} < {MIN_SLICES}: the left kernel of Phi is nontrivial for every tensor"
        )
    t1, t2, t3, t4 = Tc[0, 0], Tc[1, 0], Tc[0, 1], Tc[1, 1]
    return np.stack([
        t1 * t1, t2 * t2, t3 * t3, t4 * t4,
        t1 * t2, t1 * t3, t1 * t4, t2 * t3, t2 * t4, t3 * t4,
    ])


def extract_theta(Phi):
    """Unit vector ``theta`` with ``theta^T Phi`` minimal.

    This is the conjugate of the left singular vector of the smallest
    singular value, so that the bilinear product ``theta @ Phi`` (not
    ``theta^H Phi``) vanishes on the kernel.
    """
    Phi = np.asarray(Phi, dtype=np.complex128)
    if Phi.ndim == 2 and Phi.shape[0] == 10 and Phi.shape[1] < MIN_SLICES:
        raise UnderdeterminedError(f"Phi has {Phi.shape[1]} < {MIN_SLICES} columns")
    u, sigma_min, gap = linalg_kit.smallest_left_singular_vector(Phi)
    sigma_max = float(np.linalg.norm(Phi, 2))
    result = ThetaVector(u.conj(), sigma_min, sigma_max, gap)
    if result.ambiguous:
        warnings.warn(
            f"kernel of Phi is not well separated (sigma9/sigma10 = {gap:.3g})",
            AmbiguousKernelWarning,
            stacklevel=2,
        )
    return result


# -- folding theta into a 3x3 matrix ----------------------------------------

def m_matrix(theta):
    """Symmetric 4x4 matrix of the quadratic form with coefficient vector ``theta``."""
    t = np.asarray(theta, dtype=np.complex128).ravel()
    if t.size != 10:
        raise ValueError(f"theta must have 10 entries, got {t.size}")
    h = t / 2
    return np.array([
        [t[0], h[4], h[5], h[6]],
        [h[4], t[1], h[7], h[8]],
        [h[5], h[7], t[2], h[9]],
        [h[6], h[8], h[9], t[3]],
    ])


_S_LEFT = np.array([[1, 0, 0, 0], [0, 1, 1, 0], [0, 0, 0, 1]], dtype=float)
_S_RIGHT = _S_LEFT.T


def s_reduce(M4):
    """Linear map from 4x4 to 3x3: rearrange the 2x2 blocks, then sum the middle rows and columns."""
    M = np.asarray(M4)
    if M.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got {M.shape}")
    X = np.array([
        [M[0, 0], M[2, 0], M[0, 2], M[2, 2]],
        [M[1, 0], M[3, 0], M[1, 2], M[3, 2]],
        [M[0, 1], M[2, 1], M[0, 3], M[2, 3]],
        [M[1, 1], M[3, 1], M[1, 3], M[3, 3]],
    ])
    return _S_LEFT @ X @ _S_RIGHT


def sm_matrix(theta):
    """Closed form of ``s_reduce(m_matrix(theta))``."""
    t = np.asarray(theta).ravel()
    if t.size != 10:
        raise ValueError(f"theta must have 10 entries, got {t.size}")
    return np.array([
        [t[0], t[5], t[2]],
        [t[4], t[6] + t[7], t[9]],
        [t[1], t[8], t[3]],
    ])


# -- generators and factor assembly -----------------------------------------

def recover_generators(S3, rank_one_tol=RANK_ONE_TOL):
    """Roots of the quadratics spanned by the rank-one factors of ``S3``.

    With ``S3 ~ sigma u v^H``, the alphas are the projective roots of
    ``u1 + u2 t + u3 t^2`` and the betas those of the same polynomial in
    ``conj(v)`` (the row factor of the bilinear rank-one form).
    """
    S3 = as_matrix(S3, (3, 3))
    svd = linalg_kit.compact_svd(S3)
    s = svd.sigma
    if s[0] == 0:
        raise NotRankOneError("S matrix is zero")
    ratio = float(s[1] / s[0])
    if ratio > rank_one_tol:
        raise NotRankOneError(
            f"S matrix is not rank one (sigma2/sigma1 = {ratio:.3e} > {rank_one_tol:.1e})",
            rank_one_ratio=ratio,
        )
    u = svd.U[:, 0]
    v = svd.V[:, 0].conj()
    alpha = linalg_kit.projective_quadratic_roots(*u)
    beta = linalg_kit.projective_quadratic_roots(*v)
    return GeneratorPairs(alpha, beta, ratio)


def _generator_matrix(pair, label):
    cols = []
    for root in pair:
        cols.append([0.0, 1.0] if root.infinite else [1.0, root.value])
    M = np.array(cols, dtype=np.complex128).T
    # sine of the projective angle between the two generators
    sep = abs(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]) / (
        np.linalg.norm(M[:, 0]) * np.linalg.norm(M[:, 1])
    )
    if sep <= GENERATOR_SEPARATION_TOL:
        raise SingularRecoveryError(
            f"{label} generators coincide ({pair[0]!r}, {pair[1]!r}); factor not identifiable"
        )
    return M


def assemble_AB(g):
    """Compressed factors ``A' = [[1, 1], [a1, a2]]`` and ``B'`` likewise.

    An infinite root contributes the column ``[0, 1]``.
    """
    return _generator_matrix(g.alpha, "alpha"), _generator_matrix(g.beta, "beta")


def recover_core(Tc, Aprime, Bprime):
    """``C = Tc x1 inv(A') x2 inv(B')``."""
    Ainv = linalg_kit.invert_2x2(Aprime)
    Binv = linalg_kit.invert_2x2(Bprime)
    return contract(contract(Tc, Ainv, 1), Binv, 2)


# -- splitting the core ------------------------------------------------------

def extract_core_factors(C, rank_one_tol=RANK_ONE_TOL, pivot_tol=PIVOT_TOL):
    """Split a core tensor into ``F``, ``G`` and ``H``.

    The pivot slice ``r`` is the one whose smallest entry is largest in
    modulus; ``F = C[:, :, r]`` and ``G[:, r] = H[:, r] = 1``.  Every other
    slice divided entrywise by the pivot is rank one, and its balanced
    factorization ``sqrt(s) u``, ``sqrt(s) conj(v)`` gives the columns of ``G``
    and ``H``.  Should a pivot fail the rank-one test, the remaining
    admissible pivots are tried in order.
    """
    C = as_tensor(C)
    n3 = C.shape[2]
    norm = float(np.linalg.norm(C))
    mins = np.abs(C).reshape(-1, n3).min(axis=0)
    order = np.argsort(-mins, kind="stable")
    admissible = [int(r) for r in order if mins[r] > pivot_tol * norm]
    if not admissible:
        raise DegeneratePivotError(
            "every slice of the core has an entry near zero; no pivot slice available"
        )

    worst = None
    for r in admissible:
        X = np.moveaxis(C / C[:, :, r:r + 1], 2, 0)
        U, s, Vh = np.linalg.svd(X)
        ratios = np.where(s[:, 0] > 0, s[:, 1] / np.where(s[:, 0] > 0, s[:, 0], 1.0), 0.0)
        ratios[r] = 0.0
        max_ratio = float(ratios.max())
        if max_ratio > rank_one_tol:
            worst = max_ratio if worst is None else min(worst, max_ratio)
            continue
        u, vt = U[:, :, 0], Vh[:, 0, :]
        # fix the SVD phase: largest entry of each u real positive
        lead = u[np.arange(n3), np.abs(u).argmax(axis=1)]
        phase = lead / np.where(lead != 0, np.abs(lead), 1.0)
        root = np.sqrt(s[:, 0])
        G = (u / phase[:, None] * root[:, None]).T
        H = (vt * phase[:, None] * root[:, None]).T
        G[:, r] = 1.0
        H[:, r] = 1.0
        return CoreFactors(C[:, :, r].copy(), G, H, r, max_ratio)

    raise NotRankOneError(
        f"slice ratios are not rank one for any pivot (best sigma2/sigma1 = {worst:.3e})",
        rank_one_ratio=worst,
    )


# -- diagnostics of the core -------------------------------------------------

def psi_matrix(C):
    """``2 x N3`` matrix of products ``C11k C22k`` (row 0) and ``C21k C12k`` (row 1)."""
    C = as_tensor(C)
    if C.shape[:2] != (2, 2):
        raise ValueError(f"expected a 2 x 2 x N3 core, got {C.shape}")
    return np.stack([C[0, 0] * C[1, 1], C[1, 0] * C[0, 1]])


def core_residual(C):
    """Largest violation of the model core equations, normalized by ``max|C|**4``.

    For every pair of slices ``k, r`` the quantity
    ``C11k C22k C12r C21r - C12k C21k C11r C22r`` vanishes on model cores.
    """
    P = psi_matrix(C)
    scale = float(np.abs(C).max()) ** 4
    if scale == 0:
        return 0.0
    D = np.outer(P[0], P[1]) - np.outer(P[1], P[0])
    return float(np.abs(D).max() / scale)


# -- full pipeline -----------------------------------------------------------

@dataclass
class DecomposeOptions:
    """Knobs of :func:`decompose`.

    ``verify_tol`` bounds the final absolute squared residual; when set, the
    kernel ratio ``sigma10/sigma1`` of ``Phi`` is also checked against
    ``kernel_tol``.
    """

    als_iters: int = 0
    verify_tol: float = None
    rank_one_tol: float = RANK_ONE_TOL
    kernel_tol: float = KERNEL_TOL
    pivot_tol: float = PIVOT_TOL


@dataclass
class DecompositionDiagnostics:
    compression_ratio_mode1: float = None
    compression_ratio_mode2: float = None
    phi_kernel_ratio: float = None
    phi_gap: float = None
    kernel_ambiguous: bool = None
    rank_one_ratio: float = None
    alpha: tuple = None
    beta: tuple = None
    pivot: int = None
    slice_rank_one_max: float = None
    residual_abs_algebraic: float = None
    residual_abs: float = None
    residual_rel: float = None
    als_iterations: int = 0
    als_trace: list = field(default_factory=list)

    def asdict(self):
        return asdict(self)


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ParaTuckError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def decompose(T, options=None, **kwargs):
    """Rank-(2, 2) ParaTuck-2 decomposition of ``T``.

    Parameters
    ----------
    T : array_like, shape (N1, N2, N3)
        ``N1, N2 >= 2`` and ``N3 >= 10``.
    options : DecomposeOptions, optional
        Keyword arguments override individual fields.

    Returns
    -------
    factors : ParaTuck2Factors
    diagnostics : DecompositionDiagnostics

    Raises
    ------
    ParaTuckError
        Subclass naming the failure, with ``stage`` set to the pipeline step.
    """
    opts = options or DecomposeOptions()
    if kwargs:
        opts = DecomposeOptions(**{**asdict(opts), **kwargs})
    T = as_tensor(T)
    diag = DecompositionDiagnostics()

    if T.shape[2] < MIN_SLICES:
        raise UnderdeterminedError(
            f"N3 = {T.shape[2]} < {MIN_SLICES}", stage="phi"
        )
    comp = _stage("compress", hosvd_compress, T)
    diag.compression_ratio_mode1 = comp.ratio_mode1
    diag.compression_ratio_mode2 = comp.ratio_mode2

    Tb, d1, d2 = _stage("compress", balance_compressed, comp.Tc)
    Phi = _stage("phi", build_phi_matrix, Tb)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AmbiguousKernelWarning)
        th = _stage("kernel", extract_theta, Phi)
    diag.phi_kernel_ratio = th.kernel_ratio
    diag.phi_gap = th.gap
    diag.kernel_ambiguous = th.ambiguous
    if opts.verify_tol is not None and th.kernel_ratio > opts.kernel_tol:
        raise NotDecomposableError(
            f"Phi has no numerical left kernel (sigma10/sigma1 = {th.kernel_ratio:.3e})",
            stage="kernel",
            diagnostics=diag,
        )

    gens = _stage("generators", recover_generators, sm_matrix(th.theta), opts.rank_one_tol)
    diag.rank_one_ratio = gens.rank_one_ratio
    diag.alpha = tuple(r.value for r in gens.alpha)
    diag.beta = tuple(r.value for r in gens.beta)

    Ap, Bp = _stage("assemble", assemble_AB, gens)
    C = _stage("core", recover_core, Tb, Ap, Bp)
    core = _stage("core-factors", extract_core_factors, C, opts.rank_one_tol, opts.pivot_tol)
    diag.pivot = core.pivot
    diag.slice_rank_one_max = core.max_slice_ratio

    factors = ParaTuck2Factors(
        comp.Ac @ (d1[:, None] * Ap), comp.Bc @ (d2[:, None] * Bp), core.F, core.G, core.H
    )
    diag.residual_abs_algebraic = frob_dist_sq(T, reconstruct(factors))

    if opts.als_iters > 0:
        from .als import AlsOptions, als_run

        factors, trace = _stage(
            "als", als_run, T, factors, AlsOptions(max_iters=opts.als_iters, rel_tol=0.0)
        )
        diag.als_iterations = trace.iterations
        diag.als_trace = list(trace.errors)

    That = reconstruct(factors)
    diag.residual_abs = frob_dist_sq(T, That)
    diag.residual_rel = relative_error(T, That)
    if opts.verify_tol is not None and diag.residual_abs > opts.verify_tol:
        raise NotDecomposableError(
            f"residual {diag.residual_abs:.3e} exceeds tolerance {opts.verify_tol:.1e}",
            stage="verify",
            factors=factors,
            diagnostics=diag,
        )
    return factors, diag
