"""Input-alignment and temporal-consistency metrics.

Per-pixel metrics report in 8-bit units (differences scaled by 255); pose
error is computed on coordinates normalized to a [0, 100] square so the
value is resolution independent; cosine similarities are reported x100.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateInputError,
    DegenerateRegionError,
    DimensionMismatchError,
    InvariantViolation,
    UndefinedPoseError,
)
from .media import ImageBuffer, MaskMap, PoseFrame


@dataclass(frozen=True)
class EmbeddingVector:
    """A feature-space vector with its L2 norm cached at construction."""

    values: np.ndarray
    norm: float = field(init=False)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if arr.size < 1:
            raise InvariantViolation("embedding must have at least one dimension")
        if not np.all(np.isfinite(arr)):
            raise InvariantViolation("embedding values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "norm", float(np.linalg.norm(arr)))


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity scaled x100; errors on zero-norm inputs."""
    if a.values.size != b.values.size:
        raise DimensionMismatchError("embeddings disagree on dimension")
    if a.norm == 0.0 or b.norm == 0.0:
        raise DegenerateInputError("cosine similarity undefined for a zero-norm embedding")
    return 100.0 * float(np.dot(a.values, b.values)) / (a.norm * b.norm)


def _check_pair(a: ImageBuffer, b: ImageBuffer) -> None:
    if (a.height, a.width, a.channels) != (b.height, b.width, b.channels):
        raise DimensionMismatchError(
            f"frames disagree on dimensions: {(a.height, a.width, a.channels)} vs "
            f"{(b.height, b.width, b.channels)}"
        )


def frame_mse(a: ImageBuffer, b: ImageBuffer) -> float:
    """Mean squared per-sample difference in 8-bit units."""
    _check_pair(a, b)
    diff = (a.data - b.data) * 255.0
    return float(np.mean(diff * diff))


def frame_l1(a: ImageBuffer, b: ImageBuffer) -> float:
    """Mean absolute per-sample difference in 8-bit units."""
    _check_pair(a, b)
    return float(np.mean(np.abs(a.data - b.data) * 255.0))


def sequence_consistency(
    frames: Sequence[ImageBuffer],
    metric: Callable[[ImageBuffer, ImageBuffer], float],
) -> float:
    """Mean of ``metric`` over consecutive frame pairs."""
    if len(frames) < 2:
        raise DegenerateInputError("need at least two frames for a consistency metric")
    values = [metric(frames[t], frames[t + 1]) for t in range(len(frames) - 1)]
    return float(np.mean(values))


def cosine_consistency(embeddings: Sequence[EmbeddingVector]) -> float:
    """Mean adjacent-pair cosine similarity, x100."""
    if len(embeddings) < 2:
        raise DegenerateInputError("need at least two embeddings for a consistency metric")
    values = [
        cosine_similarity(embeddings[t], embeddings[t + 1]) for t in range(len(embeddings) - 1)
    ]
    return float(np.mean(values))


def text_alignment(
    frames: Sequence[ImageBuffer],
    prompt_embedding: EmbeddingVector,
    embed_image: Callable[[ImageBuffer], EmbeddingVector],
) -> float:
    """Mean text-to-frame cosine similarity, x100."""
    if len(frames) < 1:
        raise DegenerateInputError("need at least one frame for text alignment")
    values = [cosine_similarity(prompt_embedding, embed_image(f)) for f in frames]
    return float(np.mean(values))


POSE_NORMALIZED_SPAN = 100.0


def pose_mse(reference: PoseFrame, detected: PoseFrame, width: int, height: int) -> float:
    """Mean squared keypoint displacement on the normalized [0, 100] square.

    Coordinates are scaled by 100/width and 100/height; each jointly
    visible joint contributes ((dx)^2 + (dy)^2) / 2, and joints missing in
    either pose are excluded rather than zero-filled.
    """
    if width < 1 or height < 1:
        raise InvariantViolation("pose normalization needs positive image dimensions")
    both = reference.visible() & detected.visible()
    if not both.any():
        raise UndefinedPoseError("no jointly visible keypoints")
    ref = reference.keypoints[both, :2]
    det = detected.keypoints[both, :2]
    scale = np.array([POSE_NORMALIZED_SPAN / width, POSE_NORMALIZED_SPAN / height])
    delta = (ref - det) * scale
    return float(np.mean(np.sum(delta * delta, axis=1) / 2.0))


def extract_region(frame: ImageBuffer, mask: MaskMap, region: str) -> tuple[ImageBuffer, MaskMap]:
    """Mask out one region and crop it to its bounding box.

    ``region`` is "body" (frame x mask) or "background" (frame x (1-mask)).
    Returns the cropped region image together with the matching cropped
    coverage map (used as the patch gate by region-aware quality metrics).
    """
    if (frame.height, frame.width) != (mask.height, mask.width):
        raise DimensionMismatchError("mask does not match frame dimensions")
    if region == "body":
        weights = mask.data
    elif region == "background":
        weights = 1.0 - mask.data
    else:
        raise InvariantViolation(f"region must be 'body' or 'background', got {region!r}")
    nonzero = weights > 0.0
    if not nonzero.any():
        raise DegenerateRegionError(f"the {region} region is empty")
    rows = np.nonzero(nonzero.any(axis=1))[0]
    cols = np.nonzero(nonzero.any(axis=0))[0]
    r0, r1 = int(rows[0]), int(rows[-1]) + 1
    c0, c1 = int(cols[0]), int(cols[-1]) + 1
    masked = frame.data * weights[:, :, np.newaxis]
    return (
        ImageBuffer(masked[r0:r1, c0:c1]),
        MaskMap(weights[r0:r1, c0:c1]),
    )


def segmented_metric(
    frames: Sequence[ImageBuffer],
    masks: Sequence[MaskMap],
    metric: Callable[[Sequence[ImageBuffer]], float],
    region: str,
) -> float:
    """Evaluate a sequence metric on per-frame body or background crops.

    ``metric`` receives the list of region images (one per frame). Region
    crops of different frames may differ in size; pixel-difference metrics
    therefore only make sense at frame scope, while embedding- and
    patch-based metrics handle varying crops.
    """
    if len(frames) != len(masks):
        raise DimensionMismatchError("need exactly one mask per frame")
    regions = [extract_region(f, m, region)[0] for f, m in zip(frames, masks)]
    return metric(regions)


def mean_of(values: Iterable[float]) -> float:
    return float(np.mean(list(values)))
