"""Minimal-distortion linear embeddings of manifold-valued point clouds."""

from .classify import (
    ClassModel,
    EvalReport,
    classify,
    evaluate,
    fit_class_models,
    knn,
    raw_model,
    reconstruct,
)
from .grassmann import (
    Frame,
    TangentVector,
    exp_map,
    metric,
    polar_decompose,
    tangent_basis,
    tangent_project,
    validate_frame,
)
from .optimizer import (
    SearchConfig,
    SearchTrace,
    init_frame,
    minimize,
    stretch_refine,
    whitney_bound,
)
from .secants import (
    SecantSet,
    build_secants,
    canonical_sign,
    distortion,
    max_distortion,
)

__version__ = "0.1.0"
