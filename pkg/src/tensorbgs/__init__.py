"""Background subtraction of video volumes from compressive measurements.

The pipeline reconstructs a video volume from sub-sampled randomized
Walsh-Hadamard measurements while separating it into a low-multilinear-
rank background, a spatio-temporally continuous foreground, and a small
dense disturbance.  `solve_h` models the background with one Tucker
decomposition of the whole volume; `solve_pg` models clusters of
similar patches jointly with a shared temporal factor.
"""

from .decomp import (GroupTuckerFactors, TuckerFactors, hooi3, joint_hooi,
                     top_eigenvectors, top_singular_vectors)
from .io import (MeasurementSet, load_mask, load_measurements, load_volume,
                 save_mask, save_measurements, save_volume)
from .metrics import (MetricsReport, acc_energy_ratio, binarize,
                      evaluate_volumes, f_measure, psnr, ssim)
from .patches import (PatchClustering, PatchGeometry, extract_origins,
                      gather, knn_cluster, scatter_average)
from .sensing import CompressiveOperator, fwht, make_operator
from .solver import (SolveResult, SolverDiverged, SolverParams, solve_h,
                     solve_pg)
from .synth import SynthSpec, synth_generate
from .tensor_ops import fold, fro_norm, inner, mode_mul, ten, unfold, vec
from .tv import (diff, diff_adjoint, soft_shrink, solve_x2, tv_norm,
                 tv_spectrum)

__version__ = "0.1.0"

__all__ = [
    "CompressiveOperator", "GroupTuckerFactors", "MeasurementSet",
    "MetricsReport", "PatchClustering", "PatchGeometry", "SolveResult",
    "SolverDiverged", "SolverParams", "SynthSpec", "TuckerFactors",
    "acc_energy_ratio", "binarize", "diff", "diff_adjoint",
    "evaluate_volumes", "extract_origins", "f_measure", "fold", "fro_norm",
    "fwht", "gather", "hooi3", "inner", "joint_hooi", "knn_cluster",
    "load_mask", "load_measurements", "load_volume", "make_operator",
    "mode_mul", "psnr", "save_mask", "save_measurements", "save_volume",
    "scatter_average", "soft_shrink", "solve_h", "solve_pg", "solve_x2",
    "ssim", "synth_generate", "ten", "top_eigenvectors",
    "top_singular_vectors", "tv_norm", "tv_spectrum", "unfold", "vec",
]
