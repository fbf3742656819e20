"""Occlusion-aware two-layer (figure/ground) binocular stereo.

A level-set boundary separates a foreground and a background surface, each
modeled by a global quadratic disparity shape.  The boundary evolves under an
energy whose background data term is suppressed over half-occluded bands whose
width equals the disparity jump; disparity evidence comes from multi-scale
patch messages fused into a per-pixel Gaussian consensus.
"""

__version__ = "0.1.0"

from .costs import AlphaWeights, StereoPair
from .fields import EllipseSpec
from .metrics import MetricsReport, evaluate
from .solver import SolveResult, SolverConfig, run
from .synth import SceneSpec, generate_scene

__all__ = [
    "AlphaWeights", "EllipseSpec", "MetricsReport", "SceneSpec",
    "SolveResult", "SolverConfig", "StereoPair", "evaluate",
    "generate_scene", "run", "__version__",
]
