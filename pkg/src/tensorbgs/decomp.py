"""Low-multilinear-rank decompositions.

`hooi3` fits a rank-(r1, r2, r3) Tucker model to an order-3 tensor by
higher-order orthogonal iteration.  `joint_hooi` fits one Tucker model
per patch cluster while all clusters share the mode-3 (temporal) factor;
the shared factor is the dominant eigenspace of the summed mode-3
covariances.
"""

from dataclasses import dataclass, field

import numpy as np

from .tensor_ops import fold, fro_norm, mode_mul, unfold


def _fix_signs(u):
    # Deterministic orientation: largest-magnitude entry of each column
    # is made non-negative (first index wins ties).
    u = np.array(u, dtype=np.float64, copy=True)
    for j in range(u.shape[1]):
        col = u[:, j]
        i = int(np.argmax(np.abs(col)))
        if col[i] < 0:
            u[:, j] = -col
    return u


def top_singular_vectors(m, r):
    """Orthonormal basis of the dominant r-dimensional left singular
    subspace of m, sign-normalized for reproducibility."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("m must be a matrix")
    if not 1 <= r <= min(m.shape):
        raise ValueError(f"rank {r} out of range for shape {m.shape}")
    u, _, _ = np.linalg.svd(m, full_matrices=False)
    return _fix_signs(u[:, :r])


def top_eigenvectors(m, r):
    """Top-r eigenvectors (by descending eigenvalue) of a symmetric matrix."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("m must be square")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > 1e-10 * scale:
        raise ValueError("m is not symmetric")
    if not 1 <= r <= m.shape[0]:
        raise ValueError(f"rank {r} out of range for shape {m.shape}")
    vals, vecs = np.linalg.eigh((m + m.T) / 2.0)
    order = np.argsort(vals)[::-1][:r]
    return _fix_signs(vecs[:, order])


@dataclass
class TuckerFactors:
    """Core tensor plus one orthonormal factor per mode."""

    core: np.ndarray
    factors: tuple
    objectives: list = field(default_factory=list)

    def reconstruct(self):
        t = self.core
        for i, u in enumerate(self.factors):
            t = mode_mul(t, u, i + 1)
        return t


@dataclass
class GroupTuckerFactors:
    """Per-cluster Tucker factors with a shared mode-3 factor.

    factors_1/2/4 hold one matrix per cluster; factor_3 is common.
    """

    cores: list
    factors_1: list
    factors_2: list
    factor_3: np.ndarray
    factors_4: list
    objectives: list = field(default_factory=list)

    def reconstruct(self, p):
        t = mode_mul(self.cores[p], self.factors_1[p], 1)
        t = mode_mul(t, self.factors_2[p], 2)
        t = mode_mul(t, self.factor_3, 3)
        return mode_mul(t, self.factors_4[p], 4)


def _project(t, factors):
    for i, u in enumerate(factors):
        t = mode_mul(t, u.T, i + 1)
    return t


def hooi3(t, ranks, sweeps=20, tol=1e-8):
    """Rank-(r1, r2, r3) Tucker fit of an order-3 tensor.

    Factors are initialized from the dominant singular subspaces of the
    raw matricizations, then refined by alternating sweeps; each sweep
    updates every factor from the tensor projected onto the other two.
    Stops after `sweeps` sweeps or when the fit residual changes by less
    than `tol` relative to max(1, ||t||_F).  The residual after the
    initialization and after each sweep is recorded in `objectives`.
    """
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise ValueError(f"expected an order-3 tensor, got order {t.ndim}")
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != 3:
        raise ValueError("ranks must have three entries")
    for r, d in zip(ranks, t.shape):
        if not 1 <= r <= d:
            raise ValueError(f"rank {r} out of range for extent {d}")

    u = [top_singular_vectors(unfold(t, i + 1), ranks[i]) for i in range(3)]
    normt = fro_norm(t)
    core = _project(t, u)

    def residual(c):
        return float(np.sqrt(max(normt**2 - fro_norm(c) ** 2, 0.0)))

    objectives = [residual(core)]
    for _ in range(sweeps):
        for i in range(3):
            y = t
            for j in range(3):
                if j != i:
                    y = mode_mul(y, u[j].T, j + 1)
            u[i] = top_singular_vectors(unfold(y, i + 1), ranks[i])
        # y is already projected on modes 1 and 2 at this point
        core = mode_mul(y, u[2].T, 3)
        objectives.append(residual(core))
        if abs(objectives[-2] - objectives[-1]) <= tol * max(1.0, normt):
            break
    return TuckerFactors(core, tuple(u), objectives)


def joint_hooi(clusters, ranks, sweeps=20, tol=1e-8):
    """Shared-temporal-factor Tucker fit of a list of order-4 clusters.

    Every cluster tensor must agree on the first three extents
    (patch height, patch width, frame count); the fourth extent (cluster
    size) may vary, and the mode-4 rank is clipped to it per cluster.
    Each sweep updates the per-cluster factors by truncated SVD and then
    the shared mode-3 factor from the dominant eigenspace of the summed
    mode-3 covariances, accumulated in ascending cluster order.  The sum
    of squared fit residuals (times 1/2) is recorded per sweep in
    `objectives`.
    """
    tensors = [np.asarray(c, dtype=np.float64) for c in clusters]
    if not tensors:
        raise ValueError("clusters must be non-empty")
    for c in tensors:
        if c.ndim != 4:
            raise ValueError(f"expected order-4 cluster tensors, got order {c.ndim}")
        if c.shape[:3] != tensors[0].shape[:3]:
            raise ValueError(
                f"inconsistent cluster extents: {c.shape[:3]} vs "
                f"{tensors[0].shape[:3]}"
            )
    w1, w2, depth = tensors[0].shape[:3]
    sizes = [c.shape[3] for c in tensors]
    r1, r2, r3, r4 = (int(r) for r in ranks)
    for r, d in ((r1, w1), (r2, w2), (r3, depth), (r4, max(sizes))):
        if not 1 <= r <= d:
            raise ValueError(f"rank {r} out of range for extent {d}")
    r4s = [min(r4, n) for n in sizes]

    u1 = [top_singular_vectors(unfold(c, 1), r1) for c in tensors]
    u2 = [top_singular_vectors(unfold(c, 2), r2) for c in tensors]
    u4 = [top_singular_vectors(unfold(c, 4), r) for c, r in zip(tensors, r4s)]
    u3 = top_singular_vectors(np.hstack([unfold(c, 3) for c in tensors]), r3)

    norm2 = sum(fro_norm(c) ** 2 for c in tensors)

    def objective(zs):
        fit = sum(float(np.sum((u3.T @ z) ** 2)) for z in zs)
        return 0.5 * max(norm2 - fit, 0.0)

    def mode3_matrices():
        out = []
        for p, c in enumerate(tensors):
            y = mode_mul(mode_mul(c, u1[p].T, 1), u2[p].T, 2)
            out.append(unfold(mode_mul(y, u4[p].T, 4), 3))
        return out

    zs = mode3_matrices()
    objectives = [objective(zs)]
    for _ in range(sweeps):
        for p, c in enumerate(tensors):
            y = mode_mul(mode_mul(mode_mul(c, u2[p].T, 2), u3.T, 3), u4[p].T, 4)
            u1[p] = top_singular_vectors(unfold(y, 1), r1)
            y = mode_mul(mode_mul(mode_mul(c, u1[p].T, 1), u3.T, 3), u4[p].T, 4)
            u2[p] = top_singular_vectors(unfold(y, 2), r2)
            y = mode_mul(mode_mul(mode_mul(c, u1[p].T, 1), u2[p].T, 2), u3.T, 3)
            u4[p] = top_singular_vectors(unfold(y, 4), r4s[p])
        zs = mode3_matrices()
        cov = np.zeros((depth, depth))
        for z in zs:
            cov += z @ z.T
        u3 = top_eigenvectors(cov, r3)
        objectives.append(objective(zs))
        if abs(objectives[-2] - objectives[-1]) <= tol * max(1.0, np.sqrt(norm2)):
            break

    cores = []
    for p in range(len(tensors)):
        shape = (r1, r2, r3, r4s[p])
        cores.append(fold(u3.T @ zs[p], 3, shape))
    return GroupTuckerFactors(cores, u1, u2, u3, u4, objectives)
