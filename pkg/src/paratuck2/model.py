"""ParaTuck-2 factor model.

Frontal slice ``k`` of a ParaTuck-2 tensor is

    T[:, :, k] = A @ diag(G[:, k]) @ F @ diag(H[:, k]) @ B.T

or equivalently ``T = C x1 A x2 B`` with the core ``C[i, j, k] =
F[i, j] * G[i, k] * H[j, k]``.
"""
from dataclasses import dataclass

import numpy as np

from .tensor_core import as_matrix, as_tensor, contract, frob_dist_sq

_TINY = np.finfo(np.float64).tiny


@dataclass
class ParaTuck2Factors:
    """The quintuple ``(A, B, F, G, H)`` of a rank-(2, 2) decomposition.

    Shapes: ``A`` is ``N1 x 2``, ``B`` is ``N2 x 2``, ``F`` is ``2 x 2``,
    ``G`` and ``H`` are ``2 x N3``.
    """

    A: np.ndarray
    B: np.ndarray
    F: np.ndarray
    G: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "F", "G", "H"):
            M = as_matrix(getattr(self, name))
            if not np.all(np.isfinite(M)):
                raise ValueError(f"factor {name} has non-finite entries")
            setattr(self, name, M)
        _check_core_dims(self.F, self.G, self.H)
        R, S = self.F.shape
        if (R, S) != (2, 2):
            raise ValueError(f"only rank (2, 2) is supported, got ({R}, {S})")
        if self.A.shape[1] != R or self.B.shape[1] != S:
            raise ValueError(
                f"A and B need {R} and {S} columns, got {self.A.shape[1]} and {self.B.shape[1]}"
            )

    @property
    def R(self):
        return self.F.shape[0]

    @property
    def S(self):
        return self.F.shape[1]

    @property
    def dims(self):
        return self.A.shape[0], self.B.shape[0], self.G.shape[1]

    def copy(self):
        return ParaTuck2Factors(*(M.copy() for M in self.astuple()))

    def astuple(self):
        return self.A, self.B, self.F, self.G, self.H


def _check_core_dims(F, G, H):
    R, S = F.shape
    if G.shape[0] != R or H.shape[0] != S:
        raise ValueError(
            f"G must have {R} rows and H {S} rows, got {G.shape[0]} and {H.shape[0]}"
        )
    if G.shape[1] != H.shape[1]:
        raise ValueError(f"G and H disagree on N3: {G.shape[1]} vs {H.shape[1]}")


def core_from_factors(F, G, H):
    """Core tensor ``C[i, j, k] = F[i, j] * G[i, k] * H[j, k]``."""
    F, G, H = as_matrix(F), as_matrix(G), as_matrix(H)
    _check_core_dims(F, G, H)
    return F[:, :, None] * G[:, None, :] * H[None, :, :]


def reconstruct(f):
    """Full tensor ``C x1 A x2 B`` of a factor record."""
    C = core_from_factors(f.F, f.G, f.H)
    return contract(contract(C, f.A, 1), f.B, 2)


def random_factors(dims, rng):
    """I.i.d. standard normal (real-valued) factors, drawn in the order A, B, F, G, H."""
    n1, n2, n3 = dims
    A = rng.standard_normal((n1, 2))
    B = rng.standard_normal((n2, 2))
    F = rng.standard_normal((2, 2))
    G = rng.standard_normal((2, n3))
    H = rng.standard_normal((2, n3))
    return ParaTuck2Factors(A, B, F, G, H)


def random_instance(dims, seed):
    """Random rank-(2, 2) model tensor.

    Factors are drawn from ``numpy.random.default_rng(seed)`` (PCG64 bit
    generator, ziggurat normals), so a seed reproduces the instance bit for
    bit on every platform numpy supports.

    Returns
    -------
    factors : ParaTuck2Factors
    T : ndarray, shape dims
    """
    dims = tuple(int(n) for n in dims)
    if len(dims) != 3:
        raise ValueError(f"dims must have three entries, got {dims}")
    n1, n2, n3 = dims
    if n1 < 2 or n2 < 2:
        raise ValueError(f"N1 and N2 must be at least 2, got {dims}")
    if n3 < 10:
        raise ValueError(f"N3 must be at least 10, got {n3}")
    f = random_factors(dims, np.random.default_rng(seed))
    return f, reconstruct(f)


def relative_error(T, That):
    """``||T - That||^2 / ||T||^2``."""
    T = as_tensor(T)
    num = frob_dist_sq(T, That)
    den = float(np.vdot(T.ravel(), T.ravel()).real)
    return num / max(den, _TINY)
