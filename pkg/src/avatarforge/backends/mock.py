"""Deterministic procedural stand-ins for every neural capability.

The generator draws a color-keyed stick figure over a prompt-derived solid
background with low-amplitude seeded noise; the detector recovers joints
from the reserved per-joint palette colors, which closes the pose
round-trip at the pixel level. All mocks are pure functions of their
inputs plus the request seed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..compose import dilate, erode
from ..errors import DimensionMismatchError
from ..media import (
    KEYPOINT_COUNT,
    SKELETON_LIMBS,
    ImageBuffer,
    MaskMap,
    PoseFrame,
    to_gray,
)
from ..metrics import EmbeddingVector
from . import GenerationRequest

# Reserved 8-bit colors. Joint discs all carry R=255; backgrounds never
# exceed R=163 even after noise, and limbs are dark gray, so palette pixels
# are unambiguous.
JOINT_PALETTE = tuple((255, 64 + 10 * k, 250 - 12 * k) for k in range(KEYPOINT_COUNT))
LIMB_COLOR = (32, 32, 32)
JOINT_RADIUS = 2          # 5-pixel-wide disc
LIMB_HALF_WIDTH = 1.5     # 3-pixel-wide line
NOISE_AMPLITUDE = 3       # 8-bit units
SEGMENT_THRESHOLD = 8.0 / 255.0
EMBED_GRID = 8


def prompt_color(prompt: str) -> tuple[int, int, int]:
    """Muted 8-bit background color derived from the prompt text."""
    digest = hashlib.sha256(prompt.encode("utf-8")).digest()
    return tuple(60 + digest[i] % 101 for i in range(3))


def _disc_pixels(h: int, w: int, cx: int, cy: int, radius: int) -> tuple[np.ndarray, np.ndarray]:
    y0, y1 = max(cy - radius, 0), min(cy + radius + 1, h)
    x0, x1 = max(cx - radius, 0), min(cx + radius + 1, w)
    if y0 >= y1 or x0 >= x1:
        return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)
    yy, xx = np.mgrid[y0:y1, x0:x1]
    hit = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius * radius
    return yy[hit], xx[hit]


def _segment_pixels(h, w, p0, p1, half_width) -> tuple[np.ndarray, np.ndarray]:
    x0, y0 = p0
    x1, y1 = p1
    pad = int(np.ceil(half_width)) + 1
    ry0 = max(int(np.floor(min(y0, y1))) - pad, 0)
    ry1 = min(int(np.ceil(max(y0, y1))) + pad + 1, h)
    rx0 = max(int(np.floor(min(x0, x1))) - pad, 0)
    rx1 = min(int(np.ceil(max(x0, x1))) + pad + 1, w)
    if ry0 >= ry1 or rx0 >= rx1:
        return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)
    yy, xx = np.mgrid[ry0:ry1, rx0:rx1]
    dx, dy = x1 - x0, y1 - y0
    length_sq = dx * dx + dy * dy
    if length_sq == 0.0:
        t = np.zeros_like(xx, dtype=np.float64)
    else:
        t = np.clip(((xx - x0) * dx + (yy - y0) * dy) / length_sq, 0.0, 1.0)
    dist_sq = (xx - (x0 + t * dx)) ** 2 + (yy - (y0 + t * dy)) ** 2
    hit = dist_sq <= half_width * half_width
    return yy[hit], xx[hit]


@dataclass
class MockGenerator:
    """Procedural text2image / inpaint mock; see module docstring."""

    def generate(self, request: GenerationRequest) -> ImageBuffer:
        if request.is_inpaint:
            h, w = request.init_image.height, request.init_image.width
        else:
            h, w = request.height, request.width
        base = np.array(prompt_color(request.prompt), dtype=np.float64)
        canvas = np.empty((h, w, 3), dtype=np.float64)
        canvas[:] = base / 255.0
        rng = np.random.default_rng(request.seed)
        noise = rng.integers(-NOISE_AMPLITUDE, NOISE_AMPLITUDE + 1, size=(h, w, 1))
        canvas = np.clip(canvas + noise / 255.0, 0.0, 1.0)

        if request.pose is not None:
            kps = request.pose.keypoints
            limb = np.array(LIMB_COLOR, dtype=np.float64) / 255.0
            for a, b in SKELETON_LIMBS:
                if kps[a, 2] > 0 and kps[b, 2] > 0:
                    ys, xs = _segment_pixels(
                        h, w, (kps[a, 0], kps[a, 1]), (kps[b, 0], kps[b, 1]), LIMB_HALF_WIDTH
                    )
                    canvas[ys, xs] = limb
            for k in range(KEYPOINT_COUNT):
                if kps[k, 2] <= 0:
                    continue
                cx = int(np.rint(kps[k, 0]))
                cy = int(np.rint(kps[k, 1]))
                ys, xs = _disc_pixels(h, w, cx, cy, JOINT_RADIUS)
                canvas[ys, xs] = np.array(JOINT_PALETTE[k], dtype=np.float64) / 255.0

        if request.is_inpaint:
            inside = (request.mask.data > 0.5)[:, :, np.newaxis]
            canvas = np.where(inside, canvas, request.init_image.data)
        return ImageBuffer(canvas)


@dataclass
class MockPoseDetector:
    """Joint recovery by palette-color centroid matching."""

    def detect(self, frame: ImageBuffer) -> PoseFrame:
        kps = np.zeros((KEYPOINT_COUNT, 3), dtype=np.float64)
        if frame.channels == 3:
            tol = 0.5 / 255.0
            for k, color in enumerate(JOINT_PALETTE):
                target = np.array(color, dtype=np.float64) / 255.0
                hit = np.all(np.abs(frame.data - target) < tol, axis=2)
                ys, xs = np.nonzero(hit)
                if ys.size:
                    kps[k] = (xs.mean(), ys.mean(), 1.0)
        return PoseFrame(kps)


@dataclass
class MockSegmenter:
    """Foreground = pixels that differ from the background hint.

    Without an explicit hint, a solid hint is derived from the per-channel
    median of the frame's border ring. The raw difference mask gets a
    1-pixel closing (erode after dilate) to seal hairline gaps.
    """

    def segment(self, frame: ImageBuffer, background_hint: Optional[ImageBuffer] = None) -> MaskMap:
        if background_hint is None:
            hint = self._border_hint(frame)
        else:
            if (background_hint.height, background_hint.width, background_hint.channels) != (
                frame.height,
                frame.width,
                frame.channels,
            ):
                raise DimensionMismatchError("background hint does not match frame dimensions")
            hint = background_hint.data
        diff = np.abs(frame.data - hint)
        raw = MaskMap(np.any(diff > SEGMENT_THRESHOLD, axis=2).astype(np.float64))
        return erode(dilate(raw, 1), 1)

    @staticmethod
    def _border_hint(frame: ImageBuffer) -> np.ndarray:
        d = frame.data
        ring = np.concatenate(
            [d[0, :, :], d[-1, :, :], d[1:-1, 0, :], d[1:-1, -1, :]], axis=0
        )
        return np.median(ring, axis=0)[np.newaxis, np.newaxis, :]


@dataclass
class MockEmbedder:
    """64-dim stand-in for a joint image/text feature space.

    Images: 8x8 grid of grayscale block means, mean-centered and
    L2-normalized (flat images share a canonical basis vector so identical
    frames still score cosine 100). Text: a hash-seeded unit vector, stable
    across runs.
    """

    def embed_image(self, image: ImageBuffer) -> EmbeddingVector:
        gray = to_gray(image).data[:, :, 0]
        h, w = gray.shape
        if h < EMBED_GRID:
            gray = np.repeat(gray, -(-EMBED_GRID // h), axis=0)
        if w < EMBED_GRID:
            gray = np.repeat(gray, -(-EMBED_GRID // w), axis=1)
        h, w = gray.shape
        means = np.empty((EMBED_GRID, EMBED_GRID), dtype=np.float64)
        for i in range(EMBED_GRID):
            for j in range(EMBED_GRID):
                block = gray[
                    i * h // EMBED_GRID : (i + 1) * h // EMBED_GRID,
                    j * w // EMBED_GRID : (j + 1) * w // EMBED_GRID,
                ]
                means[i, j] = block.mean()
        v = means.reshape(-1)
        v = v - v.mean()
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            canonical = np.zeros(EMBED_GRID * EMBED_GRID)
            canonical[0] = 1.0
            return EmbeddingVector(canonical)
        return EmbeddingVector(v / norm)

    def embed_text(self, text: str) -> EmbeddingVector:
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        v = rng.standard_normal(EMBED_GRID * EMBED_GRID)
        return EmbeddingVector(v / np.linalg.norm(v))


@dataclass
class MockCaptioner:
    """Stable content-keyed caption text."""

    def caption(self, image: ImageBuffer) -> str:
        from .wire import image_digest

        return f"a procedural frame {image_digest(image)[:10]}"
