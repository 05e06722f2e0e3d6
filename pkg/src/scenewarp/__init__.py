"""scenewarp: fixed-camera RGB-D video to a complete view-time frame matrix.

The package builds a virtual camera rig around a source video, fills
every (view, timestamp) cell by forward depth warping plus routed
inpainting, and exports the result as a dataset for dynamic-scene
renderers.
"""

from .camera import (
    CameraNetwork,
    Intrinsics,
    Pose,
    TrajectorySpec,
    backproject,
    build_trajectory,
    make_intrinsics,
    project,
    relative_transform,
)
from .depth import AlignmentResult, DepthMap, align_depth, apply_alignment, sharpen_depth
from .frame import Frame
from .pipeline import (
    Pipeline,
    PipelineConfig,
    ViewTimeMatrix,
    export_dataset,
    import_dataset,
    run,
    verify,
)

__all__ = [
    "AlignmentResult",
    "CameraNetwork",
    "DepthMap",
    "Frame",
    "Intrinsics",
    "Pipeline",
    "PipelineConfig",
    "Pose",
    "TrajectorySpec",
    "ViewTimeMatrix",
    "align_depth",
    "apply_alignment",
    "backproject",
    "build_trajectory",
    "export_dataset",
    "import_dataset",
    "make_intrinsics",
    "project",
    "relative_transform",
    "run",
    "sharpen_depth",
    "verify",
]

__version__ = "0.1.0"
