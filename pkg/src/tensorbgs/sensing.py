"""Randomized Walsh-Hadamard compressive measurement operator.

A volume is measured block by block: each block (one frame, or the whole
volume in holistic mode) is zero-padded to the next power of two, its
entries are permuted, an orthonormal fast Walsh-Hadamard transform is
applied, and a fixed random subset of coefficients is kept.  Each
block's permutation and row-selection are drawn from a Philox4x64-10
counter-based generator keyed with (seed, block index): permutation
first, then the selection, so any (dims, ratio, seed, mode) tuple
reconstructs the operator bit for bit.  When the block length is
already a power of two the rows are orthonormal and
apply(adjoint(y)) = y holds exactly; with genuine zero-padding the
final truncation breaks that, which `gram_is_identity` reports.
"""

import numpy as np

MODES = ("frame", "holistic")


def is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n):
    p = 1
    while p < n:
        p *= 2
    return p


def _fwht_columns(a):
    # In-place radix-2 butterflies down the rows; orthonormal scaling.
    a = np.ascontiguousarray(a)
    n = a.shape[0]
    h = 1
    while h < n:
        v = a.reshape(-1, 2, h, a.shape[1])
        top = v[:, 0].copy()
        bot = v[:, 1].copy()
        v[:, 0] = top + bot
        v[:, 1] = top - bot
        h *= 2
    a /= np.sqrt(n)
    return a


def fwht(v):
    """Orthonormal fast Walsh-Hadamard transform of a power-of-two vector.

    Self-inverse: fwht(fwht(v)) == v up to roundoff.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("expected a vector")
    if not is_power_of_two(v.size):
        raise ValueError(f"length {v.size} is not a power of two")
    return _fwht_columns(v.reshape(-1, 1).copy())[:, 0]


def _round_half_up(x):
    return int(np.floor(x + 0.5))


class CompressiveOperator:
    """Deterministic sub-sampled permuted-Hadamard measurement map.

    Treat instances as immutable; all randomness is fixed at
    construction from (dims, ratio, seed, mode).
    """

    def __init__(self, dims, ratio, seed, mode="frame"):
        dims = tuple(int(d) for d in dims)
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise ValueError(f"dims must be three positive extents, got {dims}")
        if not 0.0 < ratio <= 1.0:
            raise ValueError(f"ratio must be in (0, 1], got {ratio}")
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be a non-negative 64-bit integer")

        h, w, d = dims
        self.dims = dims
        self.ratio = float(ratio)
        self.seed = seed
        self.mode = mode
        self.block_len = h * w if mode == "frame" else h * w * d
        self.n_blocks = d if mode == "frame" else 1
        self.padded_len = next_power_of_two(self.block_len)
        self.block_meas = max(1, _round_half_up(self.ratio * self.block_len))

        perms = np.empty((self.n_blocks, self.padded_len), dtype=np.int64)
        sels = np.empty((self.n_blocks, self.block_meas), dtype=np.int64)
        for b in range(self.n_blocks):
            rng = np.random.Generator(
                np.random.Philox(key=np.array([seed, b], dtype=np.uint64))
            )
            perms[b] = rng.permutation(self.padded_len)
            sels[b] = np.sort(
                rng.choice(self.padded_len, size=self.block_meas, replace=False)
            )
        self._perms = perms
        self._sels = sels
        # rows are orthonormal on the padded space; truncation back to the
        # block breaks that unless no padding happened at all
        self.gram_is_identity = self.block_len == self.padded_len

    @property
    def signal_len(self):
        return int(np.prod(self.dims))

    @property
    def n_measurements(self):
        return self.block_meas * self.n_blocks

    def apply(self, x):
        """Measure a volume (or canonical-order vector) of shape dims."""
        x = np.asarray(x, dtype=np.float64)
        if x.size != self.signal_len:
            raise ValueError(f"signal size {x.size} != {self.signal_len}")
        blocks = x.reshape((self.block_len, self.n_blocks), order="F")
        padded = np.zeros((self.padded_len, self.n_blocks))
        padded[: self.block_len] = blocks
        permuted = np.take_along_axis(padded, self._perms.T, axis=0)
        spectrum = _fwht_columns(permuted)
        kept = np.take_along_axis(spectrum, self._sels.T, axis=0)
        return kept.ravel(order="F")

    def adjoint(self, y):
        """Transpose map: measurements back to a canonical-order vector."""
        y = np.asarray(y, dtype=np.float64)
        if y.size != self.n_measurements:
            raise ValueError(f"measurement size {y.size} != {self.n_measurements}")
        kept = y.reshape((self.block_meas, self.n_blocks), order="F")
        spectrum = np.zeros((self.padded_len, self.n_blocks))
        np.put_along_axis(spectrum, self._sels.T, kept, axis=0)
        back = _fwht_columns(spectrum)
        padded = np.empty_like(back)
        np.put_along_axis(padded, self._perms.T, back, axis=0)
        return padded[: self.block_len].ravel(order="F")


def make_operator(dims, ratio, seed, mode="frame"):
    return CompressiveOperator(dims, ratio, seed, mode)
