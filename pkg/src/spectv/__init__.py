"""Spectral total-variation decomposition of images.

Evolves the TV gradient flow by implicit steps (ROF proximal solves),
takes the scale transform phi(t) = t * u_tt, and integrates it over a
dyadic schedule into bands that sum exactly back to the input. Ships
with eigenfunction shape generators, quality metrics, an invariance
harness, a binary band-tensor format, dataset generation, and a CLI.
"""

from .dataset import (
    generate_ground_truth,
    load_manifest,
    preprocess,
    seeded_crop,
    to_luma,
    verify_manifest,
)
from .grid import as_grid, divergence, gradient, tv_value
from .invariance import (
    InvarianceReport,
    evaluate_homogeneity,
    evaluate_rotation,
    evaluate_translation,
    invariance_table,
    translate,
)
from .metrics import MetricsReport, band_metrics, psnr, slmse, ssim
from .pipeline import DecompositionConfig, DecompositionResult, ModelDrivenDecomposer
from .shapes import ShapeSpec, predicted_scale, random_scene, render_scene
from .solver import (
    FlowTrajectory,
    ProxResult,
    SolverConfig,
    duality_gap,
    flow_evolve,
    rof_prox,
)
from .tensorfile import read_tensor, write_tensor
from .transform import (
    BandSet,
    FilterSpec,
    SpectralResponse,
    SpectrumCurve,
    apply_filter,
    dyadic_schedule,
    extract_bands,
    residual,
    spectrum,
    tv_transform,
)

__version__ = "0.1.0"

__all__ = [
    "as_grid",
    "gradient",
    "divergence",
    "tv_value",
    "SolverConfig",
    "ProxResult",
    "FlowTrajectory",
    "rof_prox",
    "flow_evolve",
    "duality_gap",
    "SpectralResponse",
    "SpectrumCurve",
    "BandSet",
    "FilterSpec",
    "tv_transform",
    "spectrum",
    "residual",
    "extract_bands",
    "apply_filter",
    "dyadic_schedule",
    "DecompositionConfig",
    "DecompositionResult",
    "ModelDrivenDecomposer",
    "ShapeSpec",
    "render_scene",
    "predicted_scale",
    "random_scene",
    "psnr",
    "ssim",
    "slmse",
    "MetricsReport",
    "band_metrics",
    "InvarianceReport",
    "evaluate_homogeneity",
    "evaluate_translation",
    "evaluate_rotation",
    "translate",
    "invariance_table",
    "seeded_crop",
    "to_luma",
    "preprocess",
    "generate_ground_truth",
    "load_manifest",
    "verify_manifest",
    "read_tensor",
    "write_tensor",
    "__version__",
]
