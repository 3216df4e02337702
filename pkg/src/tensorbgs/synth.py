"""Seeded synthetic test sequences: static background, moving object.

The background is either a smooth low-frequency gradient field or an
explicit random low-rank field, constant across frames.  The foreground
is a textured rectangle that moves with constant velocity and wraps at
the frame edges, so its pixel count is the same in every frame.  All
randomness comes from numpy's default PCG64 generator seeded with the
spec's seed.
"""

from dataclasses import dataclass

import numpy as np

BACKGROUNDS = ("gradient", "lowrank")


@dataclass(frozen=True)
class SynthSpec:
    height: int = 64
    width: int = 64
    frames: int = 32
    seed: int = 0
    background: str = "gradient"
    bg_rank: int = 3
    bg_range: tuple = (40.0, 160.0)
    object_size: tuple = (16, 16)
    velocity: tuple = (1, 2)
    intensity: tuple = (200.0, 255.0)

    def __post_init__(self):
        if min(self.height, self.width, self.frames) < 1:
            raise ValueError("volume extents must be positive")
        if self.background not in BACKGROUNDS:
            raise ValueError(f"background must be one of {BACKGROUNDS}")
        if self.bg_rank < 1:
            raise ValueError("bg_rank must be positive")
        oh, ow = self.object_size
        if not (1 <= oh <= self.height and 1 <= ow <= self.width):
            raise ValueError(f"object size {self.object_size} does not fit")
        lo, hi = self.intensity
        if not 0.0 <= lo <= hi <= 255.0:
            raise ValueError("intensity range must be within [0, 255]")
        blo, bhi = self.bg_range
        if not 0.0 <= blo <= bhi <= 255.0:
            raise ValueError("background range must be within [0, 255]")

    @classmethod
    def from_dict(cls, doc):
        known = cls.__dataclass_fields__
        unknown = set(doc) - set(known)
        if unknown:
            raise ValueError(f"unknown spec fields: {sorted(unknown)}")
        coerced = {
            k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()
        }
        return cls(**coerced)


def _rescale(field, lo, hi):
    fmin, fmax = field.min(), field.max()
    if fmax == fmin:
        return np.full_like(field, (lo + hi) / 2.0)
    return lo + (hi - lo) * (field - fmin) / (fmax - fmin)


def _background_frame(spec, rng):
    h, w = spec.height, spec.width
    ii = np.linspace(0.0, 1.0, h).reshape(-1, 1)
    jj = np.linspace(0.0, 1.0, w).reshape(1, -1)
    if spec.background == "gradient":
        a, b = rng.uniform(0.5, 1.5, size=2)
        f1, f2 = rng.uniform(0.8, 2.2, size=2)
        p1, p2 = rng.uniform(0.0, 1.0, size=2)
        field = (
            a * ii
            + b * jj
            + 0.6 * np.sin(2 * np.pi * (f1 * ii + p1))
            + 0.6 * np.cos(2 * np.pi * (f2 * jj + p2))
            + 0.4 * np.sin(2 * np.pi * f1 * ii) * np.cos(2 * np.pi * f2 * jj)
        )
    else:
        left = rng.standard_normal((h, spec.bg_rank))
        right = rng.standard_normal((spec.bg_rank, w))
        field = left @ right
    return _rescale(field, *spec.bg_range)


def synth_generate(spec):
    """Build a sequence from a spec.

    Returns (volume, background, mask), each of shape (H, W, D); the
    mask is boolean foreground support.
    """
    rng = np.random.default_rng(spec.seed)
    h, w, d = spec.height, spec.width, spec.frames
    bg_frame = _background_frame(spec, rng)
    background = np.repeat(bg_frame[:, :, None], d, axis=2)

    oh, ow = spec.object_size
    lo, hi = spec.intensity
    # smooth texture: a tilted ramp plus a gentle wave, scaled into range
    oi = np.linspace(0.0, 1.0, oh).reshape(-1, 1)
    oj = np.linspace(0.0, 1.0, ow).reshape(1, -1)
    ga, gb = rng.uniform(0.3, 1.0, size=2)
    ph = rng.uniform(0.0, 1.0)
    pattern = _rescale(
        ga * oi + gb * oj + 0.35 * np.sin(2 * np.pi * (oi + oj + ph)), lo, hi
    )
    y0 = int(rng.integers(0, h))
    x0 = int(rng.integers(0, w))
    vy, vx = spec.velocity

    volume = background.copy()
    mask = np.zeros((h, w, d), dtype=bool)
    for k in range(d):
        rows = (y0 + vy * k + np.arange(oh)) % h
        cols = (x0 + vx * k + np.arange(ow)) % w
        volume[rows[:, None], cols[None, :], k] = pattern
        mask[rows[:, None], cols[None, :], k] = True
    return volume, background, mask
