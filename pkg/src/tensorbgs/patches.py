"""Patch grid, similarity clustering, and gather/scatter maps.

The frame plane is tiled by square patch origins on a regular grid,
with extra flush-to-boundary origins so every pixel is covered.  Each
origin seeds a cluster of the most similar patches inside a local
search window; similarity is squared Euclidean distance between the
vectorized space-time patch volumes.  `gather` stacks a cluster into an
order-4 tensor and `scatter_average` puts cluster tensors back,
averaging overlaps by per-voxel coverage counts.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PatchGeometry:
    """size: patch side; step: grid stride; window: search window side;
    neighbors: patches per cluster."""

    size: int = 8
    step: int = 7
    window: int = 36
    neighbors: int = 45

    def __post_init__(self):
        if self.size < 1 or self.step < 1 or self.neighbors < 1:
            raise ValueError("size, step and neighbors must be positive")
        if self.window < self.size:
            raise ValueError("window must be at least the patch size")


def extract_origins(frame_shape, geom):
    """Top-left corners (0-based) of the patch grid over an H x W frame.

    Regular steps plus a flush origin at each far edge when the stride
    does not land there exactly, so patches cover every pixel.
    """
    h, w = (int(s) for s in frame_shape)
    if geom.size > h or geom.size > w:
        raise ValueError(f"patch size {geom.size} exceeds frame {h}x{w}")

    def axis_origins(extent):
        last = extent - geom.size
        origins = list(range(0, last + 1, geom.step))
        if origins[-1] != last:
            origins.append(last)
        return origins

    return [(r, c) for r in axis_origins(h) for c in axis_origins(w)]


@dataclass
class PatchClustering:
    """Clusters of grid origins plus per-voxel coverage weights."""

    origins: list
    clusters: list
    weights: np.ndarray
    geometry: PatchGeometry
    shortfalls: dict = field(default_factory=dict)


def knn_cluster(bg, origins, geom):
    """Group each origin with its most similar neighbors.

    Candidates are the grid origins within floor(window/2) of the seed
    in both coordinates.  They are ranked by squared distance between
    vectorized patch volumes of `bg`; the seed itself ranks first and
    remaining ties break by ascending (row, col).  Each cluster keeps
    the `neighbors` best; windows holding fewer candidates keep them
    all and the shortfall is recorded.
    """
    bg = np.asarray(bg, dtype=np.float64)
    if bg.ndim != 3:
        raise ValueError(f"expected an order-3 volume, got order {bg.ndim}")
    if not origins:
        raise ValueError("origins must be non-empty")
    w = geom.size
    vecs = np.stack([bg[r : r + w, c : c + w, :].ravel() for r, c in origins])
    coords = np.asarray(origins, dtype=np.int64)
    half = geom.window // 2

    clusters = []
    shortfalls = {}
    for s, (sr, sc) in enumerate(origins):
        inside = (np.abs(coords[:, 0] - sr) <= half) & (
            np.abs(coords[:, 1] - sc) <= half
        )
        cand = np.nonzero(inside)[0]
        delta = vecs[cand] - vecs[s]
        dist2 = np.einsum("ij,ij->i", delta, delta)
        not_seed = (cand != s).astype(np.int64)
        order = np.lexsort((coords[cand, 1], coords[cand, 0], not_seed, dist2))
        keep = cand[order[: geom.neighbors]]
        if keep.size < geom.neighbors:
            shortfalls[s] = int(keep.size)
        clusters.append([origins[i] for i in keep])

    weights = np.zeros(bg.shape)
    for members in clusters:
        for r, c in members:
            weights[r : r + w, c : c + w, :] += 1.0
    return PatchClustering(
        origins=list(origins),
        clusters=clusters,
        weights=weights,
        geometry=geom,
        shortfalls=shortfalls,
    )


def gather(x, members, geom):
    """Stack the member patches of a volume into a (w, w, D, n) tensor."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"expected an order-3 volume, got order {x.ndim}")
    w = geom.size
    if not members:
        raise ValueError("cluster has no members")
    return np.stack([x[r : r + w, c : c + w, :] for r, c in members], axis=3)


def scatter_average(tensors, clustering):
    """Accumulate cluster tensors back into a volume and divide by the
    coverage weights.  Inverts `gather` over all clusters exactly."""
    weights = clustering.weights
    if np.any(weights == 0):
        raise ValueError("coverage weights contain zeros; clustering is invalid")
    if len(tensors) != len(clustering.clusters):
        raise ValueError(
            f"{len(tensors)} tensors for {len(clustering.clusters)} clusters"
        )
    w = clustering.geometry.size
    acc = np.zeros(weights.shape)
    for t, members in zip(tensors, clustering.clusters):
        t = np.asarray(t, dtype=np.float64)
        if t.shape != (w, w, weights.shape[2], len(members)):
            raise ValueError(
                f"cluster tensor shape {t.shape} does not match its members"
            )
        for n, (r, c) in enumerate(members):
            acc[r : r + w, c : c + w, :] += t[:, :, :, n]
    return acc / weights
