"""Certified l2 robustness bounds for dense ReLU networks."""

__version__ = "0.1.0"

from .adversary import AttackResult, lip_naive_bound, pgd_upper_bound, sample_min
from .box import BoxBounds, LinearBound, ibp, lirpa_backward, relaxations_from_boxes
from .linalg import SpectralNormError, spectral_norm
from .network import DenseLayer, ModelFormatError, Network, load, load_dataset, margin_spec, save
from .optimize import (
    METHODS,
    BoundProblem,
    OptimizerConfig,
    VerificationResult,
    margin,
    optimize_lower_bound,
)
from .relaxation import NeuronRelaxation, relax_relu
from .sdp import (
    ball_propagate,
    ellipsoid_bounds,
    ellipsoid_propagate,
    optimal_offset_zero_center,
    sdp_offset,
    sdp_offset_extension,
    sdpcrown_backward,
)
from .sets import Ball, Box, Ellipsoid

__all__ = [name for name in dir() if not name.startswith("_")]
