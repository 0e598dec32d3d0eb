"""Small dense linear-algebra and polynomial helpers used by the solver."""
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePolynomialError, NumericalError, SingularRecoveryError

# |c2| <= ROOT_AT_INFINITY_TOL * max|c| puts a root at infinity
ROOT_AT_INFINITY_TOL = 1e-10
POLY_DEGENERATE_TOL = 1e-14
SINGULAR_DET_TOL = 1e-14
_TINY = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class SvdResult:
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def reconstruct(self):
        return (self.U * self.sigma) @ self.V.conj().T


@dataclass(frozen=True)
class ProjectiveRoot:
    """A root of a quadratic on the projective line.

    ``value`` is ``None`` for the root at infinity.
    """

    value: complex = None

    @property
    def infinite(self):
        return self.value is None

    @classmethod
    def at_infinity(cls):
        return cls(None)

    def __repr__(self):
        return "ProjectiveRoot(inf)" if self.infinite else f"ProjectiveRoot({self.value!r})"


def compact_svd(M):
    """Thin SVD ``M = U diag(sigma) V^H`` with nonincreasing ``sigma``."""
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.size == 0:
        raise ValueError(f"compact_svd needs a nonempty matrix, got shape {M.shape}")
    try:
        U, s, Vh = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return SvdResult(U, s, Vh.conj().T)


def best_rank1(M):
    """Leading singular triplet ``(sigma1, u, v)`` so that ``M ~ sigma1 u v^H``."""
    svd = compact_svd(M)
    return float(svd.sigma[0]), svd.U[:, 0], svd.V[:, 0]


def smallest_left_singular_vector(M):
    """Left singular vector of a 10-row matrix for its smallest singular value.

    Returns
    -------
    theta : ndarray, shape (10,)
        Unit-norm vector ``u`` with ``u^H M = sigma_min v^H``.
    sigma_min : float
    gap : float
        ``sigma_9 / sigma_10``; large values mean a well separated
        one-dimensional kernel.
    """
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != 10:
        raise ValueError(f"expected a 10-row matrix, got shape {M.shape}")
    if M.shape[1] < 10:
        raise ValueError(
            f"need at least 10 columns to identify a left kernel, got {M.shape[1]}"
        )
    svd = compact_svd(M)
    s = svd.sigma
    gap = float(s[8] / max(s[9], _TINY))
    return svd.U[:, 9], float(s[9]), gap


def invert_2x2(M):
    """Closed-form inverse of a 2x2 matrix."""
    M = np.asarray(M, dtype=np.complex128)
    if M.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {M.shape}")
    a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    det = a * d - b * c
    scale = np.linalg.norm(M) ** 2
    if abs(det) <= SINGULAR_DET_TOL * scale:
        raise SingularRecoveryError(f"2x2 matrix is singular (|det|={abs(det):.3e})")
    return np.array([[d, -b], [-c, a]]) / det


def projective_quadratic_roots(c0, c1, c2, scale=1.0):
    """Roots of ``c0 + c1 t + c2 t**2`` on the projective line.

    A negligible leading coefficient puts one root at infinity, and two
    leading coefficients negligible put both there.  Finite roots use the
    cancellation-free branch for the larger root and ``c0 / (c2 t1)`` for
    its companion.

    Parameters
    ----------
    c0, c1, c2 : complex
    scale : float, optional
        Magnitude the coefficients are compared against to detect the
        all-zero polynomial.
    """
    c0, c1, c2 = complex(c0), complex(c1), complex(c2)
    cmax = max(abs(c0), abs(c1), abs(c2))
    if cmax <= POLY_DEGENERATE_TOL * scale:
        raise DegeneratePolynomialError(
            f"all coefficients negligible ({cmax:.3e} vs scale {scale:.3e})"
        )
    tol = ROOT_AT_INFINITY_TOL * cmax
    if abs(c2) <= tol:
        if abs(c1) <= tol:
            return ProjectiveRoot.at_infinity(), ProjectiveRoot.at_infinity()
        return ProjectiveRoot(-c0 / c1), ProjectiveRoot.at_infinity()

    sq = np.sqrt(c1 * c1 - 4 * c0 * c2)
    # pick the sign that avoids cancellation in c1 + sq
    if (c1.conjugate() * sq).real < 0:
        sq = -sq
    q = -0.5 * (c1 + sq)
    if q == 0:
        # c1 == 0 and c0 == 0: double root at the origin
        return ProjectiveRoot(0j), ProjectiveRoot(0j)
    return ProjectiveRoot(complex(q / c2)), ProjectiveRoot(complex(c0 / q))


def lstsq(M, rhs, rcond=None):
    """Minimum-norm least-squares solution of ``M x = rhs``.

    Works on stacks: ``M`` may have shape ``(..., m, n)`` and ``rhs``
    ``(..., m)`` or ``(..., m, p)``.  Singular values below
    ``rcond * sigma_max`` are discarded (default ``eps * max(m, n)``, as in
    LAPACK ``gelsd``).

    Returns
    -------
    x : ndarray
    deficient : bool
        True if any system in the stack was numerically rank deficient.
    """
    M = np.asarray(M, dtype=np.complex128)
    rhs = np.asarray(rhs, dtype=np.complex128)
    vector = rhs.ndim == M.ndim - 1
    if vector:
        rhs = rhs[..., None]
    m, n = M.shape[-2:]
    if rcond is None:
        rcond = np.finfo(np.float64).eps * max(m, n)
    try:
        U, s, Vh = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"least-squares SVD did not converge: {exc}") from exc
    cutoff = rcond * s[..., :1]
    keep = s > cutoff
    s_inv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    x = np.conj(np.swapaxes(Vh, -1, -2)) @ (s_inv[..., None] * (np.conj(np.swapaxes(U, -1, -2)) @ rhs))
    deficient = bool(np.any(~keep))
    if vector:
        x = x[..., 0]
    return x, deficient
