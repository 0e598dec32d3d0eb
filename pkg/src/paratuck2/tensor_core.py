"""Dense complex third-order tensors.

A tensor is a plain ``complex128`` :class:`numpy.ndarray` of shape
``(N1, N2, N3)``.  Frontal slices are ``T[:, :, k]``.  Whenever a tensor is
flattened (file I/O, unfoldings) the layout is slice-major with column-major
order inside a slice, i.e. entry ``(i, j, k)`` sits at ``i + j*N1 + k*N1*N2``.
This is numpy's Fortran order, so ``T.ravel(order="F")`` is the flat layout.

Frontal slice indices are 0-based, as everywhere else in numpy.
"""
import numpy as np

__all__ = [
    "as_tensor",
    "as_matrix",
    "frontal_slice",
    "contract",
    "unfold",
    "frob_dist_sq",
    "from_flat",
    "to_flat",
]


def as_tensor(T):
    """Validate and convert ``T`` to a finite complex third-order array."""
    T = np.asarray(T, dtype=np.complex128)
    if T.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got ndim={T.ndim}")
    if min(T.shape) < 1:
        raise ValueError(f"tensor dims must be positive, got {T.shape}")
    if not np.all(np.isfinite(T)):
        raise ValueError("tensor has non-finite entries")
    return T


def as_matrix(M, shape=None):
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={M.ndim}")
    if shape is not None and M.shape != tuple(shape):
        raise ValueError(f"expected a {shape[0]}x{shape[1]} matrix, got {M.shape}")
    return M


def frontal_slice(T, k):
    """Return the frontal slice ``T[:, :, k]`` (0-based ``k``)."""
    T = as_tensor(T)
    n3 = T.shape[2]
    if not (isinstance(k, (int, np.integer)) and 0 <= k < n3):
        raise IndexError(f"slice index {k} out of range for N3={n3}")
    return T[:, :, k]


def contract(T, M, mode):
    """Mode-``mode`` contraction of ``T`` with matrix ``M``.

    Summation runs over the second index of ``M``:
    ``(T x1 M)[i, j, k] = sum_l T[l, j, k] * M[i, l]`` and likewise for
    mode 2.  The contracted dimension is replaced by ``M.shape[0]``.
    """
    T = as_tensor(T)
    M = as_matrix(M)
    if mode == 1:
        if M.shape[1] != T.shape[0]:
            raise ValueError(
                f"mode-1 contraction needs M.cols={T.shape[0]}, got {M.shape[1]}"
            )
        return np.einsum("il,ljk->ijk", M, T)
    if mode == 2:
        if M.shape[1] != T.shape[1]:
            raise ValueError(
                f"mode-2 contraction needs M.cols={T.shape[1]}, got {M.shape[1]}"
            )
        return np.einsum("jl,ilk->ijk", M, T)
    raise ValueError(f"mode must be 1 or 2, got {mode!r}")


def unfold(T, mode):
    """Mode-1 or mode-2 unfolding.

    Mode 1 gives an ``N1 x (N2*N3)`` matrix with column ``j + k*N2``; mode 2
    gives ``N2 x (N1*N3)`` with column ``i + k*N1``.
    """
    T = as_tensor(T)
    if mode == 1:
        return T.reshape(T.shape[0], -1, order="F")
    if mode == 2:
        return T.transpose(1, 0, 2).reshape(T.shape[1], -1, order="F")
    raise ValueError(f"mode must be 1 or 2, got {mode!r}")


def frob_dist_sq(T, U):
    """Squared Frobenius distance ``sum |T - U|**2``."""
    T = as_tensor(T)
    U = as_tensor(U)
    if T.shape != U.shape:
        raise ValueError(f"shape mismatch: {T.shape} vs {U.shape}")
    d = (T - U).ravel()
    return float(np.vdot(d, d).real)


def to_flat(T):
    """Flatten to the slice-major layout."""
    return as_tensor(T).ravel(order="F")


def from_flat(dims, data):
    dims = tuple(int(n) for n in dims)
    if len(dims) != 3 or min(dims) < 1:
        raise ValueError(f"dims must be three positive integers, got {dims}")
    data = np.asarray(data, dtype=np.complex128).ravel()
    expected = dims[0] * dims[1] * dims[2]
    if data.size != expected:
        raise ValueError(f"data length {data.size} does not match dims {dims} ({expected})")
    return data.reshape(dims, order="F")
