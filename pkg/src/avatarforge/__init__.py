"""avatarforge: pose- and text-guided motion video harness and evaluation suite."""

from .media import FrameSequence, ImageBuffer, MaskMap, PoseFrame
from .pipeline import PipelineConfig, PromptSpec

__version__ = "0.1.0"

__all__ = [
    "FrameSequence",
    "ImageBuffer",
    "MaskMap",
    "PipelineConfig",
    "PoseFrame",
    "PromptSpec",
    "__version__",
]
