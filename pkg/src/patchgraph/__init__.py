"""Patch-graph weight learning and clutter-suppressed visual tracking."""

__version__ = "0.1.0"

from .errors import (
    DecodeError,
    DegenerateDescriptorError,
    FormatError,
    GeometryError,
    InputError,
    NumericalError,
    ParameterError,
    PatchGraphError,
)
from .geometry import BoundingBox, center_distance, iou
from .graphlearn import (
    GraphParams,
    GraphSolution,
    SeedAssignment,
    laplacian,
    shrink_l21,
    soft_threshold,
    solve,
    solve_variant,
)
from .frames import ScalePlan, load_sequence, rescale_for_min_side
from .patches import (
    FrameMaps,
    PatchLayout,
    describe_patch,
    feature_matrix,
    init_seeds,
    partition,
)
from .tracker import (
    PatchGraphTracker,
    StructuredSVM,
    confidence,
    sigmoid_weights,
    track_sequence,
    weighted_descriptor,
)
from .config import RunConfig, resolve_config

__all__ = [
    "BoundingBox",
    "DecodeError",
    "DegenerateDescriptorError",
    "FormatError",
    "FrameMaps",
    "GeometryError",
    "GraphParams",
    "GraphSolution",
    "InputError",
    "NumericalError",
    "ParameterError",
    "PatchGraphError",
    "PatchGraphTracker",
    "PatchLayout",
    "RunConfig",
    "ScalePlan",
    "SeedAssignment",
    "StructuredSVM",
    "center_distance",
    "confidence",
    "describe_patch",
    "feature_matrix",
    "init_seeds",
    "iou",
    "laplacian",
    "load_sequence",
    "partition",
    "rescale_for_min_side",
    "resolve_config",
    "shrink_l21",
    "sigmoid_weights",
    "soft_threshold",
    "solve",
    "solve_variant",
    "track_sequence",
    "weighted_descriptor",
    "__version__",
]
