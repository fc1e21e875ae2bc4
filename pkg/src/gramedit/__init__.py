"""Spectral editing of sinusoidal implicit SDF networks.

Train small sine-activated coordinate networks on signed distance fields,
extract the deformation eigenmodes of their last-layer Gram operator, and
apply optimization-free geometric edits through a closed-form head update.
"""

__version__ = "0.1.0"

from .edit import (
    EditSolution,
    EditTarget,
    apply_edit,
    blend_heads,
    blend_heads_by_solve,
    editability_ratio,
    external_edit,
    in_span_edit,
    solve_edit,
)
from .geometry import AnalyticShape, DeformationField, SamplingSpec, sample
from .gram import (
    FeatureMatrix,
    GramSpectrum,
    build_feature_matrix,
    deformation_mode,
    eig_sym,
    gram_of,
    spectrum_of,
    stability_sweep,
    subspace_similarity,
)
from .mesher import Mesh, MetricResult, chamfer_hausdorff, marching_cubes, sample_surface
from .model import Head, Model, features, forward, init_model, load_model, save_model
from .training import TrainConfig, train
