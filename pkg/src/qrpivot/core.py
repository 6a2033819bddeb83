"""Precision handling, column-major matrix helpers, and elementary kernels.

Matrices are plain numpy arrays in Fortran (column-major) order so that a
column slice ``a[i0:, j]`` is a contiguous view.  Working precision is a
property of the array dtype; all decision arithmetic elsewhere in the
package derives its rounding behaviour from the dtypes produced here.
"""
from __future__ import annotations

import numpy as np
from numba import njit

PRECISIONS = ("single", "double")
FIELDS = ("real", "complex")

_WORKING_DTYPES = {
    ("single", "real"): np.float32,
    ("single", "complex"): np.complex64,
    ("double", "real"): np.float64,
    ("double", "complex"): np.complex128,
}

_REAL_OF = {
    np.dtype(np.float32): np.dtype(np.float32),
    np.dtype(np.float64): np.dtype(np.float64),
    np.dtype(np.complex64): np.dtype(np.float32),
    np.dtype(np.complex128): np.dtype(np.float64),
}


def working_dtype(precision: str, field: str) -> np.dtype:
    """Map (precision, field) to the numpy dtype used for matrix storage."""
    try:
        return np.dtype(_WORKING_DTYPES[(precision, field)])
    except KeyError:
        raise ValueError(
            f"unknown precision/field combination: {precision!r}/{field!r}"
        ) from None


def real_dtype(dtype) -> np.dtype:
    """Real dtype carrying the norms and control variables for ``dtype``."""
    dt = np.dtype(dtype)
    try:
        return _REAL_OF[dt]
    except KeyError:
        raise ValueError(f"unsupported working dtype: {dt}") from None


def eps(dtype) -> float:
    """Machine epsilon of the working precision behind ``dtype``."""
    return float(np.finfo(real_dtype(dtype)).eps)


def is_complex(dtype) -> bool:
    return np.dtype(dtype).kind == "c"


def precision_of(dtype) -> str:
    return "single" if real_dtype(dtype).itemsize == 4 else "double"


def as_matrix(a, dtype=None) -> np.ndarray:
    """Return ``a`` as a 2-D Fortran-ordered array of a supported dtype."""
    out = np.asfortranarray(a, dtype=dtype)
    if out.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={out.ndim}")
    real_dtype(out.dtype)  # validates the dtype
    return out


@njit(cache=True, nogil=True)
def _lassq(x, scale, ssq):
    # One-pass scaled sum of squares: running max as the scale, squares
    # accumulated relative to it.  All arithmetic stays in the dtype of x.
    one = ssq
    for i in range(x.shape[0]):
        v = abs(x[i])
        if v != 0.0:
            if scale < v:
                r = scale / v
                ssq = one + ssq * (r * r)
                scale = v
            else:
                r = v / scale
                ssq = ssq + r * r
    return scale, ssq


def scaled_sumsq(x: np.ndarray) -> tuple:
    """(scale, sumsq) of a 1-D array with ``norm = scale * sqrt(sumsq)``.

    Complex input accumulates the interleaved real and imaginary parts in
    index order, matching the reference scaled-norm routines.
    """
    x = np.ascontiguousarray(x)
    if x.dtype.kind == "c":
        x = x.view(real_dtype(x.dtype))
    rdt = x.dtype.type
    if x.size == 0:
        return rdt(0), rdt(1)
    # The kernel unboxes its results to python floats; wrap them back so
    # later combines keep rounding in the working precision.
    s, q = _lassq(x, rdt(0), rdt(1))
    return rdt(s), rdt(q)


def combine_sumsq(s1, q1, s2, q2) -> tuple:
    """Merge two (scale, sumsq) pairs into one, in the pairs' dtype."""
    if s2 == 0:
        return s1, q1
    if s1 >= s2:
        r = s2 / s1
        return s1, q1 + q2 * (r * r)
    r = s1 / s2
    return s2, q2 + q1 * (r * r)


def norm_from_sumsq(s, q) -> float:
    return float(s * np.sqrt(q))


def column_norm(a: np.ndarray, j: int, i0: int = 0) -> float:
    """Euclidean norm of ``a[i0:, j]`` with overflow/underflow guarding.

    Returns 0.0 for an empty range.  Out-of-range indices raise IndexError.
    """
    m, n = a.shape
    if not 0 <= j < n:
        raise IndexError(f"column index {j} out of range for n={n}")
    if not 0 <= i0 <= m:
        raise IndexError(f"start row {i0} out of range for m={m}")
    s, q = scaled_sumsq(a[i0:, j])
    return norm_from_sumsq(s, q)


def vector_norm(x: np.ndarray) -> float:
    """Euclidean norm of a 1-D array via the same scaled one-pass kernel."""
    s, q = scaled_sumsq(x)
    return norm_from_sumsq(s, q)


def apply_reflector_block(block: np.ndarray, v: np.ndarray, coef) -> None:
    """In-place ``block <- (I - coef * v * v^H) block``."""
    if block.shape[0] != v.shape[0]:
        raise ValueError(
            f"block has {block.shape[0]} rows but v has length {v.shape[0]}"
        )
    if coef == 0 or block.shape[1] == 0:
        return
    w = np.conj(v) @ block
    block -= np.outer(coef * v, w)


def gemv_update(a: np.ndarray, k: int, v: np.ndarray, tau) -> np.ndarray:
    """Apply ``I - tau * v * v^H`` to the trailing block ``a[k:, k+1:]``.

    The update is in place; rows above ``k`` are untouched.  ``v`` spans
    rows ``k..m-1`` and must have a unit leading entry.
    """
    m, n = a.shape
    if not 0 <= k < min(m, n):
        raise IndexError(f"step {k} out of range for shape {a.shape}")
    if v.shape[0] != m - k:
        raise ValueError(f"v has length {v.shape[0]}, expected {m - k}")
    apply_reflector_block(a[k:, k + 1 :], v, tau)
    return a
