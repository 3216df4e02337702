"""Anisotropic 3D total variation with circular boundaries.

`diff` stacks the three circular forward differences of a volume
(channel order: horizontal, vertical, temporal); `diff_adjoint` is its
exact adjoint.  Because the boundaries wrap, the combined operator
beta_x0*I + beta_f*D'D is diagonalized by the 3D DFT, which `solve_x2`
exploits to invert it in closed form against a precomputed spectrum.
"""

import numpy as np
import scipy.fft

# channel -> volume axis the difference runs along
_AXES = (1, 0, 2)


def diff(x):
    """Circular forward differences, shape (3, H, W, D): horizontal
    (next column), vertical (next row), temporal (next frame)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"expected an order-3 volume, got order {x.ndim}")
    d = np.empty((3,) + x.shape)
    for c, ax in enumerate(_AXES):
        d[c] = np.roll(x, -1, axis=ax) - x
    return d


def diff_adjoint(g):
    """Adjoint of :func:`diff`; maps a (3, H, W, D) field to a volume."""
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 4 or g.shape[0] != 3:
        raise ValueError(f"expected shape (3, H, W, D), got {g.shape}")
    out = np.zeros(g.shape[1:])
    for c, ax in enumerate(_AXES):
        out += np.roll(g[c], 1, axis=ax) - g[c]
    return out


def tv_norm(x):
    """Anisotropic total variation: l1 norm of all three difference fields."""
    return float(np.sum(np.abs(diff(x))))


def soft_shrink(x, tau):
    """Elementwise soft thresholding, the prox of tau*|.|_1."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def tv_spectrum(shape):
    """Eigenvalues of D'D on volumes of the given shape, as a real
    non-negative (H, W, D) array (zero at the zero frequency)."""
    shape = tuple(int(s) for s in shape)
    if len(shape) != 3:
        raise ValueError(f"expected a 3-entry shape, got {shape}")
    spectrum = np.zeros(shape)
    for c, ax in enumerate(_AXES):
        kern = np.zeros(shape[ax])
        kern[0] -= 1.0
        kern[-1] += 1.0  # size-1 axis: difference operator degenerates to 0
        s = np.abs(scipy.fft.fft(kern)) ** 2
        dims = [1, 1, 1]
        dims[ax] = shape[ax]
        spectrum += s.reshape(dims)
    return spectrum


def solve_x2(c, beta_x0, beta_f, spectrum):
    """Solve (beta_x0*I + beta_f*D'D) x = c by FFT diagonalization.

    `spectrum` must come from :func:`tv_spectrum` for c's shape.  The
    inverse transform's imaginary residue is checked to be negligible
    relative to the output and discarded.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 3:
        raise ValueError(f"expected an order-3 volume, got order {c.ndim}")
    if spectrum.shape != c.shape:
        raise ValueError(f"spectrum shape {spectrum.shape} != volume {c.shape}")
    if beta_x0 <= 0:
        raise ValueError("beta_x0 must be positive")
    if beta_f < 0:
        raise ValueError("beta_f must be non-negative")
    xhat = scipy.fft.fftn(c) / (beta_x0 + beta_f * spectrum)
    x = scipy.fft.ifftn(xhat)
    out = np.ascontiguousarray(x.real)
    if np.linalg.norm(x.imag.ravel()) > 1e-10 * np.linalg.norm(out.ravel()):
        raise FloatingPointError("unexpected imaginary residue in TV solve")
    return out
