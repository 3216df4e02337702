"""ADMM solvers that split compressive measurements of a video volume
into a low-multilinear-rank background, a total-variation-regularized
foreground, and a small dense disturbance.

Both solvers share the same splitting: auxiliary difference field f for
the TV term and an explicit copy constraint x0 = x1 + x2 + e tied to the
measurements y = A(x0).  Each iteration solves the x0 normal equations
(in closed form when the operator certifies A A' = I, by conjugate
gradients otherwise), refits the background to the current residual
volume, updates the disturbance and the TV-smoothed foreground in
closed form, shrinks the difference field, and then takes gradient
ascent steps on the multipliers.  Penalties grow by a fixed factor
whenever their constraint residual decays too slowly.

The background starts from a ridge-regularized least-squares fit of a
single static frame against all measurements (every frame observes the
static part through a different random projection, so the stack is
strongly overdetermined at moderate ratios); the foreground starts
empty.  Starting instead from the raw backprojection leaves the
iteration in a measurement-feasible stall whose background estimate is
biased by the sampling ratio, so this initialization is what makes
recovery degrade gracefully as the ratio drops.

`solve_h` fits the background with a single Tucker model on the whole
volume; `solve_pg` fits clustered patch groups with a shared temporal
factor and re-clusters periodically.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg

from .decomp import hooi3, joint_hooi
from .patches import PatchGeometry, extract_origins, gather, knn_cluster, \
    scatter_average
from .tensor_ops import ten
from .tv import diff, diff_adjoint, soft_shrink, solve_x2, tv_spectrum


@dataclass
class SolverParams:
    """Model weights, ranks, penalty policy, and iteration limits.

    `ranks` overrides the background Tucker ranks; left as None they
    default to (ceil(0.65*H), ceil(0.65*W), r3).  `patch_ranks` are the
    per-cluster ranks for the patch-grouped solver.
    """

    lam: float = 0.05
    ranks: tuple = None
    r3: int = 1
    patch_ranks: tuple = (8, 8, 1, 21)
    geometry: PatchGeometry = PatchGeometry()
    gamma: float = 1.1
    penalty_growth: float = 1.15
    residual_decay: float = 0.95
    beta_y: float = None
    beta_x0: float = None
    beta_f: float = None
    max_iter: int = 200
    rel_tol: float = 1e-5
    hooi_sweeps: int = 2
    recluster_period: int = 8
    cg_tol: float = 1e-8
    cg_max_iter: int = 100
    init_ridge: float = 0.1
    divergence_limit: float = 1e12

    def validate(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.penalty_growth <= 1:
            raise ValueError("penalty_growth must exceed 1")
        if not 0 < self.residual_decay < 1:
            raise ValueError("residual_decay must be in (0, 1)")
        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.hooi_sweeps < 1:
            raise ValueError("hooi_sweeps must be positive")
        if self.recluster_period < 1:
            raise ValueError("recluster_period must be positive")
        if self.init_ridge < 0:
            raise ValueError("init_ridge must be non-negative")
        for b in (self.beta_y, self.beta_x0, self.beta_f):
            if b is not None and b <= 0:
                raise ValueError("penalty overrides must be positive")

    def tucker_ranks(self, dims):
        h, w, d = dims
        ranks = self.ranks
        if ranks is None:
            ranks = (math.ceil(0.65 * h), math.ceil(0.65 * w), self.r3)
        ranks = tuple(int(r) for r in ranks)
        for r, extent in zip(ranks, dims):
            if not 1 <= r <= extent:
                raise ValueError(f"rank {r} out of range for extent {extent}")
        return ranks


@dataclass
class SolveResult:
    """Recovered volume x0 and its parts: background x1, foreground x2,
    disturbance e (all H x W x D), with per-iteration diagnostics."""

    x0: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    e: np.ndarray
    iterations: int
    converged: bool
    diagnostics: list
    residuals: dict
    wall_time: float


class SolverDiverged(RuntimeError):
    """Raised when an iterate blows up; carries diagnostics so far."""

    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


DIAGNOSTIC_FIELDS = ("iter", "relChg_x0", "relChg_x2", "nRes_y", "nRes_x0",
                     "nRes_f", "beta_y", "objective")


class _TuckerBackground:
    def __init__(self, params, dims):
        self.ranks = params.tucker_ranks(dims)
        self.sweeps = params.hooi_sweeps

    def prepare(self, bg):
        pass

    def step(self, xt):
        return hooi3(xt, self.ranks, sweeps=self.sweeps).reconstruct()


class _PatchGroupBackground:
    def __init__(self, params, dims):
        h, w, d = dims
        self.geom = params.geometry
        self.ranks = tuple(int(r) for r in params.patch_ranks)
        r1, r2, r3, r4 = self.ranks
        for r, extent in ((r1, self.geom.size), (r2, self.geom.size),
                          (r3, d), (r4, self.geom.neighbors)):
            if not 1 <= r <= extent:
                raise ValueError(f"patch rank {r} out of range for {extent}")
        self.sweeps = params.hooi_sweeps
        self.period = params.recluster_period
        self.origins = extract_origins((h, w), self.geom)
        self.clustering = None
        self.current_bg = None
        self.steps = 0

    def prepare(self, bg):
        self.current_bg = bg
        self.clustering = knn_cluster(bg, self.origins, self.geom)

    def step(self, xt):
        if self.steps > 0 and self.steps % self.period == 0:
            self.clustering = knn_cluster(self.current_bg, self.origins,
                                          self.geom)
        self.steps += 1
        stacks = [gather(xt, members, self.geom)
                  for members in self.clustering.clusters]
        group = joint_hooi(stacks, self.ranks, sweeps=self.sweeps)
        recon = [group.reconstruct(p) for p in range(len(stacks))]
        bg = scatter_average(recon, self.clustering)
        self.current_bg = bg
        return bg


def _default_penalty(values):
    scale = float(np.mean(np.abs(values)))
    return 1e-5 / scale if scale > 0 else 1e-5


def _static_background(y, op, params):
    """Ridge-regularized least squares for one static frame seen through
    every frame's measurement block, solved by conjugate gradients.

    The ridge weight is params.init_ridge * D * ratio * (1 - ratio), so
    full sampling is solved exactly and undersampled systems are damped
    in their weakly observed directions.
    """
    h, w, d = op.dims
    rhs = ten(op.adjoint(y), op.dims).sum(axis=2)
    ridge = params.init_ridge * d * op.ratio * (1.0 - op.ratio)

    def gram(v):
        tiled = np.repeat(v.reshape(h, w, order="F")[:, :, None], d, axis=2)
        back = ten(op.adjoint(op.apply(tiled)), op.dims).sum(axis=2)
        return back.ravel(order="F") + ridge * v

    mat = scipy.sparse.linalg.LinearOperator((h * w, h * w), matvec=gram)
    sol, _ = scipy.sparse.linalg.cg(
        mat, rhs.ravel(order="F"), rtol=params.cg_tol, atol=0.0,
        maxiter=params.cg_max_iter,
    )
    return sol.reshape(h, w, order="F")


def _admm(y, op, params, background, init=None):
    params.validate()
    dims = op.dims
    start = time.perf_counter()
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != op.n_measurements:
        raise ValueError(f"measurement size {y.size} != {op.n_measurements}")

    aty = ten(op.adjoint(y), dims)
    beta_y = params.beta_y or _default_penalty(y)
    beta_x0 = params.beta_x0 or _default_penalty(aty)
    beta_f = params.beta_f or _default_penalty(aty)

    if init is None:
        static = _static_background(y, op, params)
        x1 = hooi3(
            np.repeat(static[:, :, None], dims[2], axis=2),
            params.tucker_ranks(dims), sweeps=params.hooi_sweeps,
        ).reconstruct()
        x2 = np.zeros(dims)
        x0 = x1.copy()
        e = np.zeros(dims)
    else:
        x0 = np.array(init.x0, dtype=np.float64)
        x1 = np.array(init.x1, dtype=np.float64)
        x2 = np.array(init.x2, dtype=np.float64)
        e = np.array(init.e, dtype=np.float64)
    f = np.zeros((3,) + dims)
    mult_f = np.zeros((3,) + dims)
    mult_x0 = np.zeros(dims)
    mult_y = np.zeros(y.size)

    background.prepare(x1)
    spectrum = tv_spectrum(dims)
    prev_res = {"y": math.inf, "x0": math.inf, "f": math.inf}
    diagnostics = []
    residuals = dict(prev_res)
    converged = False
    iterations = 0
    x0_prev, x2_prev = x0, x2

    for it in range(1, params.max_iter + 1):
        # recover the full volume against the measurements
        rhs = mult_x0 + beta_x0 * (x2 + e + x1) \
            + ten(op.adjoint(beta_y * y - mult_y), dims)
        if getattr(op, "gram_is_identity", False):
            # A A' = I makes A'A a projection, inverting the normal
            # equations in two operator applications
            proj = ten(op.adjoint(op.apply(rhs)), dims)
            x0 = (rhs - (beta_y / (beta_x0 + beta_y)) * proj) / beta_x0
        else:
            n = rhs.size
            mat = scipy.sparse.linalg.LinearOperator(
                (n, n),
                matvec=lambda v: beta_x0 * v
                + beta_y * op.adjoint(op.apply(v)),
            )
            sol, _ = scipy.sparse.linalg.cg(
                mat, rhs.ravel(order="F"), x0=x0_prev.ravel(order="F"),
                rtol=params.cg_tol, atol=0.0, maxiter=params.cg_max_iter,
            )
            x0 = ten(sol, dims)

        # refit the background to what the other parts do not explain
        xt = x0 - x2 - e - mult_x0 / beta_x0
        x1 = background.step(xt)

        # small dense disturbance
        e = beta_x0 * (x0 - x2 - x1 - mult_x0 / beta_x0) / (1.0 + beta_x0)

        # TV-smoothed foreground
        c = beta_x0 * (x0 - x1 - e) - mult_x0 \
            + diff_adjoint(beta_f * f - mult_f)
        x2 = solve_x2(c, beta_x0, beta_f, spectrum)

        # shrink the difference field
        dx2 = diff(x2)
        f = soft_shrink(dx2 + mult_f / beta_f, params.lam / beta_f)

        res_f = f - dx2
        res_x0 = x0 - x1 - x2 - e
        res_y = y - op.apply(x0)
        mult_f = mult_f - params.gamma * beta_f * res_f
        mult_x0 = mult_x0 - params.gamma * beta_x0 * res_x0
        mult_y = mult_y - params.gamma * beta_y * res_y

        residuals = {
            "y": float(np.linalg.norm(res_y)),
            "x0": float(np.linalg.norm(res_x0.ravel())),
            "f": float(np.linalg.norm(res_f.ravel())),
        }
        # grow a penalty whenever its residual stalls
        if residuals["y"] > params.residual_decay * prev_res["y"]:
            beta_y *= params.penalty_growth
        if residuals["x0"] > params.residual_decay * prev_res["x0"]:
            beta_x0 *= params.penalty_growth
        if residuals["f"] > params.residual_decay * prev_res["f"]:
            beta_f *= params.penalty_growth
        prev_res = residuals

        relchg_x0 = float(
            np.linalg.norm((x0 - x0_prev).ravel())
            / max(1.0, np.linalg.norm(x0_prev.ravel()))
        )
        relchg_x2 = float(
            np.linalg.norm((x2 - x2_prev).ravel())
            / max(1.0, np.linalg.norm(x2_prev.ravel()))
        )
        objective = params.lam * float(np.sum(np.abs(dx2))) \
            + 0.5 * float(np.sum(e**2))
        diagnostics.append({
            "iter": it,
            "relChg_x0": relchg_x0,
            "relChg_x2": relchg_x2,
            "nRes_y": residuals["y"],
            "nRes_x0": residuals["x0"],
            "nRes_f": residuals["f"],
            "beta_y": beta_y,
            "objective": objective,
        })
        iterations = it

        peak = max(np.max(np.abs(a)) if a.size else 0.0
                   for a in (x0, x1, x2, e))
        if not np.isfinite(peak) or peak > params.divergence_limit:
            raise SolverDiverged(
                f"iterate magnitude {peak:.3e} at iteration {it}", diagnostics
            )

        x0_prev, x2_prev = x0, x2
        if relchg_x0 < params.rel_tol:
            converged = True
            break

    return SolveResult(
        x0=x0, x1=x1, x2=x2, e=e,
        iterations=iterations, converged=converged,
        diagnostics=diagnostics, residuals=residuals,
        wall_time=time.perf_counter() - start,
    )


def solve_h(y, op, params=None):
    """Recover (x0, x1, x2, e) with a whole-volume Tucker background."""
    params = params or SolverParams()
    return _admm(y, op, params, _TuckerBackground(params, op.dims))


def solve_pg(y, op, params=None, init=None):
    """Recover (x0, x1, x2, e) with a patch-grouped background.

    Without an explicit `init`, the Tucker solver runs first and its
    result warm-starts this one.  The first clustering is computed on
    the initial background and refreshed every `recluster_period`
    iterations from the latest background estimate.
    """
    params = params or SolverParams()
    if init is None:
        init = solve_h(y, op, params)
    return _admm(y, op, params, _PatchGroupBackground(params, op.dims),
                 init=init)
