"""Dense tensor primitives: matricization, folding, mode products.

All routines operate on float64 numpy arrays of order 1 to 4.  The
canonical vectorization is column-major (Fortran order): the first index
varies fastest.  Mode-n matricization follows the standard convention in
which the mode-n fibers become columns and the remaining indices cycle
with the lowest mode fastest.  Modes are 1-based throughout, matching
the usual mode-n notation.
"""

import numpy as np

MAX_ORDER = 4


def _check_order(t):
    if t.ndim < 1 or t.ndim > MAX_ORDER:
        raise ValueError(f"tensor order must be in 1..{MAX_ORDER}, got {t.ndim}")


def _check_mode(t, mode):
    _check_order(t)
    if not 1 <= mode <= t.ndim:
        raise ValueError(f"mode {mode} out of range for order-{t.ndim} tensor")


def vec(t):
    """Flatten a tensor to a vector in canonical (first-index-fastest) order."""
    _check_order(np.asarray(t))
    return np.asarray(t, dtype=np.float64).ravel(order="F")


def ten(v, dims):
    """Reshape a canonical-order vector back into a tensor of shape `dims`."""
    v = np.asarray(v, dtype=np.float64)
    dims = tuple(int(d) for d in dims)
    if len(dims) < 1 or len(dims) > MAX_ORDER:
        raise ValueError(f"dims must have 1..{MAX_ORDER} entries, got {len(dims)}")
    if v.size != int(np.prod(dims)):
        raise ValueError(f"vector length {v.size} does not match dims {dims}")
    return v.reshape(dims, order="F")


def unfold(t, mode):
    """Mode-n matricization.

    Returns the I_mode x (prod of other extents) matrix whose columns are
    the mode-n fibers, ordered so that the lowest remaining mode cycles
    fastest.
    """
    t = np.asarray(t, dtype=np.float64)
    _check_mode(t, mode)
    return np.moveaxis(t, mode - 1, 0).reshape(
        (t.shape[mode - 1], -1), order="F"
    )


def fold(m, mode, dims):
    """Inverse of :func:`unfold`: rebuild the tensor of shape `dims`."""
    m = np.asarray(m, dtype=np.float64)
    dims = tuple(int(d) for d in dims)
    if len(dims) < 1 or len(dims) > MAX_ORDER:
        raise ValueError(f"dims must have 1..{MAX_ORDER} entries, got {len(dims)}")
    if not 1 <= mode <= len(dims):
        raise ValueError(f"mode {mode} out of range for dims {dims}")
    rest = dims[: mode - 1] + dims[mode:]
    if m.shape != (dims[mode - 1], int(np.prod(rest, dtype=np.int64))):
        raise ValueError(
            f"matrix shape {m.shape} does not match dims {dims} at mode {mode}"
        )
    t = m.reshape((dims[mode - 1],) + rest, order="F")
    return np.moveaxis(t, 0, mode - 1)


def mode_mul(t, u, mode):
    """Mode-n product t x_mode u, contracting mode `mode` of t with the
    columns of u.  The result has extent u.shape[0] along that mode."""
    t = np.asarray(t, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    _check_mode(t, mode)
    if u.ndim != 2:
        raise ValueError("u must be a matrix")
    if u.shape[1] != t.shape[mode - 1]:
        raise ValueError(
            f"matrix columns {u.shape[1]} do not match tensor extent "
            f"{t.shape[mode - 1]} along mode {mode}"
        )
    prod = np.tensordot(u, t, axes=([1], [mode - 1]))
    return np.moveaxis(prod, 0, mode - 1)


def inner(a, b):
    """Elementwise inner product of two same-shaped tensors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))


def fro_norm(t):
    """Frobenius norm."""
    return float(np.linalg.norm(np.asarray(t, dtype=np.float64).ravel()))
