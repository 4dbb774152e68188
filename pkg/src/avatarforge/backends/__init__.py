"""Pluggable neural-capability slots: interfaces, mocks, and HTTP adapter.

Every model the pipeline consumes (text-to-image with pose control,
inpainting, segmentation, pose detection, embedding, captioning, prompt
refinement) is reached through one slot of a BackendSuite. The procedural
mocks make the whole pipeline runnable and testable on a desk; the HTTP
adapter speaks the sidecar wire protocol.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

from ..errors import InvariantViolation
from ..media import ImageBuffer, MaskMap, PoseFrame
from ..metrics import EmbeddingVector

DEFAULT_GUIDANCE_SCALE = 7.5
DEFAULT_STEPS = 25


@dataclass(frozen=True)
class GenerationRequest:
    """One generator call: prompt plus optional pose/frame/inpaint conditioning."""

    prompt: str
    negative_prompt: str = ""
    pose: Optional[PoseFrame] = None
    prev_frame: Optional[ImageBuffer] = None
    init_image: Optional[ImageBuffer] = None
    mask: Optional[MaskMap] = None
    guidance_scale: float = DEFAULT_GUIDANCE_SCALE
    steps: int = DEFAULT_STEPS
    seed: int = 0
    width: int = 512
    height: int = 512

    def __post_init__(self):
        if self.steps < 1:
            raise InvariantViolation("steps must be >= 1")
        if self.guidance_scale <= 0:
            raise InvariantViolation("guidance_scale must be positive")
        if (self.init_image is None) != (self.mask is None):
            raise InvariantViolation("inpaint mode requires both init_image and mask")
        if self.init_image is not None and (
            (self.init_image.height, self.init_image.width) != (self.mask.height, self.mask.width)
        ):
            raise InvariantViolation("init_image and mask disagree on dimensions")

    @property
    def is_inpaint(self) -> bool:
        return self.init_image is not None


class Generator(Protocol):
    def generate(self, request: GenerationRequest) -> ImageBuffer: ...


class Segmenter(Protocol):
    def segment(self, frame: ImageBuffer, background_hint: Optional[ImageBuffer] = None) -> MaskMap: ...


class PoseDetector(Protocol):
    def detect(self, frame: ImageBuffer) -> PoseFrame: ...


class Embedder(Protocol):
    def embed_image(self, image: ImageBuffer) -> EmbeddingVector: ...
    def embed_text(self, text: str) -> EmbeddingVector: ...


class Captioner(Protocol):
    def caption(self, image: ImageBuffer) -> str: ...


class PromptRefiner(Protocol):
    def refine(self, instruction: str) -> str: ...


@dataclass
class BackendSuite:
    """One implementation per capability slot; the LLM refiner is optional."""

    text2image: Generator
    inpainter: Generator
    segmenter: Segmenter
    pose_detector: PoseDetector
    embedder: Embedder
    captioner: Captioner
    llm_refiner: Optional[PromptRefiner] = None


def mock_suite() -> BackendSuite:
    """A full suite of deterministic procedural mocks."""
    from .mock import MockCaptioner, MockEmbedder, MockGenerator, MockPoseDetector, MockSegmenter

    gen = MockGenerator()
    return BackendSuite(
        text2image=gen,
        inpainter=gen,
        segmenter=MockSegmenter(),
        pose_detector=MockPoseDetector(),
        embedder=MockEmbedder(),
        captioner=MockCaptioner(),
        llm_refiner=None,
    )


def http_suite(endpoint: str, timeout: float = 300.0) -> BackendSuite:
    """A suite whose every slot POSTs to a sidecar at ``endpoint``."""
    from .http import HttpBackend

    be = HttpBackend(endpoint, timeout=timeout)
    return BackendSuite(
        text2image=be.text2image,
        inpainter=be.inpainter,
        segmenter=be.segmenter,
        pose_detector=be.pose_detector,
        embedder=be.embedder,
        captioner=be.captioner,
        llm_refiner=be.refiner,
    )
