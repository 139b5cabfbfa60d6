"""nmfx: explain CNN image classifiers by factoring their feature maps into
K spatial topics (NMF, label-supervised SSNMF), projecting held-out data with
NNLS, and rendering per-topic heatmap overlays at image resolution.
"""

import os

# BLAS thread cap must land before numpy's first import anywhere in the
# package; NMFX_THREADS > 1 trades bitwise determinism for speed.
_threads = os.environ.get("NMFX_THREADS", "1")
for _var in (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
):
    os.environ.setdefault(_var, _threads)
del _var

from nmfx.errors import (
    IterationBudgetError,
    MalformedHeaderError,
    NegativeEntryError,
    NmfxError,
    ShapeMismatchError,
    SolverDivergenceError,
    SolverError,
    UnsupportedDtypeError,
    ValidationError,
)
from nmfx.tensors import DataMatrix, FeatureTensor, flatten_features, unflatten_weights
from nmfx.nmf import FactorModel, NmfConfig, nmf_fit, nmf_init, nmf_step
from nmfx.ssnmf import LabelMatrix, SsnmfConfig, build_label_matrix, ssnmf_fit, ssnmf_step
from nmfx.nnls import NnlsConfig, nnls, project, project_features
from nmfx.heatmap import (
    HeatmapStack,
    OverlayImage,
    binarize_heat,
    normalize_heat,
    render_overlay,
    topic_palette,
    upsample,
)
from nmfx.fixtures import PlantedSpec, generate, iou, label_mass_shares, two_group_spec

__version__ = "0.1.0"

__all__ = [
    "DataMatrix",
    "FactorModel",
    "FeatureTensor",
    "HeatmapStack",
    "IterationBudgetError",
    "LabelMatrix",
    "MalformedHeaderError",
    "NegativeEntryError",
    "NmfConfig",
    "NmfxError",
    "NnlsConfig",
    "OverlayImage",
    "PlantedSpec",
    "ShapeMismatchError",
    "SolverDivergenceError",
    "SolverError",
    "SsnmfConfig",
    "UnsupportedDtypeError",
    "ValidationError",
    "binarize_heat",
    "build_label_matrix",
    "flatten_features",
    "generate",
    "iou",
    "label_mass_shares",
    "nmf_fit",
    "nmf_init",
    "nmf_step",
    "nnls",
    "normalize_heat",
    "project",
    "project_features",
    "render_overlay",
    "ssnmf_fit",
    "ssnmf_step",
    "topic_palette",
    "two_group_spec",
    "unflatten_weights",
    "upsample",
]
