"""Reconstruction and detection quality metrics for 0-255 scale frames.

`psnr` defaults to a summed-error denominator (10*log10(255^2 / sum of
squared errors)); pass mode="mse" for the conventional per-pixel mean
squared error denominator.  Reports produced by `evaluate_volumes` use
the "mse" mode so their numbers are comparable to the usual PSNR scale,
and record which mode was used.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from skimage.filters import threshold_otsu


def psnr(ref, test, mode="summed"):
    """Peak signal-to-noise ratio of one frame against a reference.

    mode "summed" divides 255^2 by the total squared error; mode "mse"
    divides by the mean squared error.  Identical frames give +inf.
    """
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    if mode not in ("summed", "mse"):
        raise ValueError(f"unknown psnr mode {mode!r}")
    err = float(np.sum((ref - test) ** 2))
    if err == 0.0:
        return math.inf
    if mode == "mse":
        err /= ref.size
    return 10.0 * math.log10(255.0**2 / err)


_SSIM_C1 = (0.01 * 255.0) ** 2
_SSIM_C2 = (0.03 * 255.0) ** 2
_SSIM_WIN = 8


def ssim(ref, test):
    """Mean structural similarity over all 8x8 uniform windows."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    if ref.ndim != 2:
        raise ValueError("expected 2D frames")
    if min(ref.shape) < _SSIM_WIN:
        raise ValueError(f"frames smaller than the {_SSIM_WIN}x{_SSIM_WIN} window")
    shape = (_SSIM_WIN, _SSIM_WIN)
    wx = np.lib.stride_tricks.sliding_window_view(ref, shape)
    wy = np.lib.stride_tricks.sliding_window_view(test, shape)
    mx = wx.mean(axis=(2, 3))
    my = wy.mean(axis=(2, 3))
    vx = (wx**2).mean(axis=(2, 3)) - mx**2
    vy = (wy**2).mean(axis=(2, 3)) - my**2
    cov = (wx * wy).mean(axis=(2, 3)) - mx * my
    num = (2 * mx * my + _SSIM_C1) * (2 * cov + _SSIM_C2)
    den = (mx**2 + my**2 + _SSIM_C1) * (vx + vy + _SSIM_C2)
    return float(np.mean(num / den))


def binarize(fg, method="rel", tau=0.1):
    """Per-frame foreground mask from a magnitude volume.

    "rel" thresholds |fg| at tau times the frame maximum; "otsu" uses
    Otsu's threshold on |fg|.  Flat frames give an empty mask.
    """
    fg = np.asarray(fg, dtype=np.float64)
    if fg.ndim != 3:
        raise ValueError(f"expected an order-3 volume, got order {fg.ndim}")
    if method not in ("rel", "otsu"):
        raise ValueError(f"unknown binarize method {method!r}")
    if method == "rel" and not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0, 1), got {tau}")
    mag = np.abs(fg)
    mask = np.zeros(fg.shape, dtype=bool)
    for k in range(fg.shape[2]):
        frame = mag[:, :, k]
        top = frame.max()
        if top == frame.min():
            continue
        thr = tau * top if method == "rel" else threshold_otsu(frame)
        mask[:, :, k] = frame > thr
    return mask


def f_measure(mask, gt, per_frame=False):
    """Harmonic mean of precision and recall, averaged over frames.

    Frames where both the mask and the ground truth are empty score 1;
    frames with an empty ground truth but a non-empty mask score 0.
    """
    mask = np.asarray(mask, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if mask.shape != gt.shape:
        raise ValueError(f"shape mismatch: {mask.shape} vs {gt.shape}")
    if mask.ndim != 3:
        raise ValueError(f"expected order-3 masks, got order {mask.ndim}")
    scores = np.empty(mask.shape[2])
    for k in range(mask.shape[2]):
        m = mask[:, :, k]
        g = gt[:, :, k]
        if not g.any():
            scores[k] = 1.0 if not m.any() else 0.0
            continue
        tp = float(np.sum(m & g))
        fp = float(np.sum(m & ~g))
        fn = float(np.sum(~m & g))
        denom = 2 * tp + fp + fn
        scores[k] = 2 * tp / denom if denom > 0 else 0.0
    return scores if per_frame else float(scores.mean())


def acc_energy_ratio(m, k):
    """Share of singular-value mass carried by the k largest values."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("m must be a matrix")
    if not 1 <= k <= min(m.shape):
        raise ValueError(f"k={k} out of range for shape {m.shape}")
    s = np.linalg.svd(m, compute_uv=False)
    total = float(s.sum())
    if total == 0.0:
        raise ValueError("zero matrix has no energy ratio")
    return float(s[:k].sum()) / total


@dataclass
class MetricsReport:
    """Per-frame metric columns plus their means.

    `psnr_mode` records which PSNR denominator convention the report's
    psnr columns were computed with.
    """

    columns: dict
    psnr_mode: str = "mse"
    means: dict = field(init=False)

    def __post_init__(self):
        n = {len(v) for v in self.columns.values()}
        if len(n) > 1:
            raise ValueError("metric columns have unequal lengths")
        self.means = {k: float(np.mean(v)) for k, v in self.columns.items()}

    def to_csv(self, path):
        names = list(self.columns)
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["frame"] + names)
            n_frames = len(next(iter(self.columns.values())))
            for i in range(n_frames):
                out.writerow([i] + [repr(self.columns[c][i]) for c in names])
            out.writerow(["mean"] + [repr(self.means[c]) for c in names])

    def to_json(self, path):
        doc = {
            "psnr_mode": self.psnr_mode,
            "frames": {k: list(v) for k, v in self.columns.items()},
            "mean": self.means,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")


def evaluate_volumes(recon, truth, fg=None, gt_mask=None, gt_bg=None,
                     recon_bg=None, psnr_mode="mse", binarize_method="rel",
                     tau=0.1):
    """Frame-by-frame quality report of a reconstruction against truth.

    Adds an F-measure column when a foreground volume and ground-truth
    mask are given, and a background PSNR column when both background
    volumes are given.
    """
    recon = np.asarray(recon, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if recon.shape != truth.shape:
        raise ValueError(f"shape mismatch: {recon.shape} vs {truth.shape}")
    depth = recon.shape[2]
    cols = {
        "psnr": [psnr(truth[:, :, k], recon[:, :, k], mode=psnr_mode)
                 for k in range(depth)],
        "ssim": [ssim(truth[:, :, k], recon[:, :, k]) for k in range(depth)],
    }
    if fg is not None and gt_mask is not None:
        mask = binarize(fg, method=binarize_method, tau=tau)
        cols["f_measure"] = list(f_measure(mask, gt_mask, per_frame=True))
    if gt_bg is not None and recon_bg is not None:
        gt_bg = np.asarray(gt_bg, dtype=np.float64)
        recon_bg = np.asarray(recon_bg, dtype=np.float64)
        cols["psnr_bg"] = [
            psnr(gt_bg[:, :, k], recon_bg[:, :, k], mode=psnr_mode)
            for k in range(depth)
        ]
    return MetricsReport(columns=cols, psnr_mode=psnr_mode)
