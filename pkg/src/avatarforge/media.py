"""Core image, mask, and pose types plus frame-sequence I/O.

Pixel values live in [0, 1] double precision everywhere; 8-bit PNGs are
divided by 255 exactly on load and re-quantized only on save. Metrics that
the literature states in 8-bit units rescale at the reporting boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DegenerateInputError, DimensionMismatchError, FormatError, InvariantViolation

KEYPOINT_COUNT = 18

# COCO-body 18-keypoint ordering: nose, neck, shoulders/elbows/wrists (R then
# L), hips/knees/ankles (R then L), eyes, ears.
KEYPOINT_NAMES = (
    "nose", "neck",
    "r_shoulder", "r_elbow", "r_wrist",
    "l_shoulder", "l_elbow", "l_wrist",
    "r_hip", "r_knee", "r_ankle",
    "l_hip", "l_knee", "l_ankle",
    "r_eye", "l_eye", "r_ear", "l_ear",
)

# Limb connectivity over the ordering above.
SKELETON_LIMBS = (
    (1, 2), (1, 5), (2, 3), (3, 4), (5, 6), (6, 7),
    (1, 8), (8, 9), (9, 10), (1, 11), (11, 12), (12, 13),
    (1, 0), (0, 14), (14, 16), (0, 15), (15, 17),
)


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ImageBuffer:
    """An H x W x C grid of scalars in [0, 1], immutable after construction."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise InvariantViolation(f"image data must be HxWxC, got shape {arr.shape}")
        h, w, c = arr.shape
        if h < 1 or w < 1:
            raise InvariantViolation("image dimensions must be at least 1x1")
        if c not in (1, 3):
            raise InvariantViolation(f"channel count must be 1 or 3, got {c}")
        if not np.all(np.isfinite(arr)):
            raise InvariantViolation("image samples must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise InvariantViolation("image samples must lie in [0, 1]")
        object.__setattr__(self, "data", _frozen(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class MaskMap:
    """Per-pixel coverage in [0, 1]; binary masks are the 0/1 special case."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise InvariantViolation(f"mask data must be HxW, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvariantViolation("mask dimensions must be at least 1x1")
        if not np.all(np.isfinite(arr)):
            raise InvariantViolation("mask values must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise InvariantViolation("mask values must lie in [0, 1]")
        object.__setattr__(self, "data", _frozen(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class PoseFrame:
    """One 18-keypoint skeleton: rows of (x, y, confidence).

    Confidence 0 marks a missing keypoint. Coordinates are pixels with the
    origin at the image's top-left corner.
    """

    keypoints: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.keypoints, dtype=np.float64)
        if arr.shape != (KEYPOINT_COUNT, 3):
            raise InvariantViolation(
                f"pose must have shape ({KEYPOINT_COUNT}, 3), got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvariantViolation("pose values must be finite")
        if arr[:, 2].min() < 0.0 or arr[:, 2].max() > 1.0:
            raise InvariantViolation("confidences must lie in [0, 1]")
        object.__setattr__(self, "keypoints", _frozen(arr))

    def visible(self) -> np.ndarray:
        """Boolean mask of keypoints with confidence > 0."""
        return self.keypoints[:, 2] > 0.0

    def flat(self) -> list[float]:
        """Keypoints as the x0,y0,c0,...,x17,y17,c17 JSON layout."""
        return [float(v) for v in self.keypoints.reshape(-1)]


@dataclass(frozen=True)
class FrameSequence:
    """An ordered list of same-sized frames plus a playback rate."""

    frames: tuple[ImageBuffer, ...]
    fps: float = 24.0

    def __post_init__(self):
        frames = tuple(self.frames)
        if self.fps <= 0:
            raise InvariantViolation("fps must be positive")
        dims = {(f.height, f.width, f.channels) for f in frames}
        if len(dims) > 1:
            raise InvariantViolation(f"frames must share dimensions, got {sorted(dims)}")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)


def load_frame(path) -> ImageBuffer:
    """Load an 8-bit PNG as an ImageBuffer, dividing samples by 255 exactly.

    RGBA/LA alpha channels are dropped; palette images are expanded to RGB.
    """
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"no such image file: {path}")
    with Image.open(path) as img:
        mode = img.mode
        if mode == "P":
            img = img.convert("RGB")
            mode = "RGB"
        if mode in ("RGBA", "LA"):
            arr = np.asarray(img)[:, :, :-1]
        elif mode in ("RGB", "L"):
            arr = np.asarray(img)
        else:
            raise FormatError(f"unsupported PNG mode {mode!r} (8-bit gray/RGB only): {path}")
    if arr.dtype != np.uint8:
        raise FormatError(f"unsupported bit depth in {path}")
    if arr.ndim == 3 and arr.shape[2] == 2:
        arr = arr[:, :, :1]
    return ImageBuffer(arr.astype(np.float64) / 255.0)


def save_frame(img: ImageBuffer, path) -> None:
    """Write an ImageBuffer as an 8-bit PNG (round-half-even quantization)."""
    arr = np.rint(img.data * 255.0).astype(np.uint8)
    if img.channels == 1:
        pil = Image.fromarray(arr[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(arr, mode="RGB")
    pil.save(Path(path), format="PNG")


def load_mask(path) -> MaskMap:
    """Load a gray PNG as a MaskMap (255 maps to coverage 1.0)."""
    img = load_frame(path)
    gray = to_gray(img)
    return MaskMap(gray.data[:, :, 0])


def save_mask(mask: MaskMap, path) -> None:
    """Write a MaskMap as an 8-bit gray PNG."""
    save_frame(ImageBuffer(mask.data), path)


def to_gray(img: ImageBuffer) -> ImageBuffer:
    """Rec.601 luma (0.299 R + 0.587 G + 0.114 B); identity on 1-channel input."""
    if img.channels == 1:
        return img
    d = img.data
    luma = 0.299 * d[:, :, 0] + 0.587 * d[:, :, 1] + 0.114 * d[:, :, 2]
    # Weights sum to 1 so luma stays in [0,1]; clip guards last-ulp overshoot.
    return ImageBuffer(np.clip(luma, 0.0, 1.0))


def downsample_half(img: ImageBuffer) -> ImageBuffer:
    """2x2 box average; output dimensions are floor(dim / 2)."""
    h, w = img.height, img.width
    if h < 2 or w < 2:
        raise DegenerateInputError(f"cannot halve a {h}x{w} image")
    h2, w2 = h // 2, w // 2
    d = img.data[: 2 * h2, : 2 * w2, :]
    blocks = d.reshape(h2, 2, w2, 2, img.channels)
    out = (blocks[:, 0, :, 0] + blocks[:, 0, :, 1] + blocks[:, 1, :, 0] + blocks[:, 1, :, 1]) / 4.0
    return ImageBuffer(out)


def halve_mask(mask: MaskMap) -> MaskMap:
    """2x2 box average of a coverage mask (companion to downsample_half)."""
    half = downsample_half(ImageBuffer(mask.data))
    return MaskMap(half.data[:, :, 0])


def read_pose_file(path) -> list[PoseFrame]:
    """Parse the keypoint JSON schema into one PoseFrame per frame entry.

    Schema: ``{"frames": [{"keypoints": [x0,y0,c0, ..., x17,y17,c17]}]}``.
    A null in any slot of a triplet marks that joint missing (confidence 0).
    """
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"no such pose file: {path}")
    try:
        doc = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"pose file is not valid JSON: {path}: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("frames"), list):
        raise FormatError(f"pose file must contain a 'frames' list: {path}")
    poses = []
    for idx, entry in enumerate(doc["frames"]):
        if not isinstance(entry, dict) or "keypoints" not in entry:
            raise FormatError(f"frame {idx} lacks a 'keypoints' field: {path}")
        poses.append(pose_from_flat(entry["keypoints"], where=f"{path} frame {idx}"))
    return poses


def pose_from_flat(values, where: str = "pose payload") -> PoseFrame:
    """Build a PoseFrame from the flat 54-value keypoint layout."""
    if not isinstance(values, (list, tuple)) or len(values) != KEYPOINT_COUNT * 3:
        n = len(values) if isinstance(values, (list, tuple)) else "non-list"
        raise FormatError(f"{where}: expected {KEYPOINT_COUNT * 3} keypoint values, got {n}")
    kps = np.zeros((KEYPOINT_COUNT, 3), dtype=np.float64)
    for k in range(KEYPOINT_COUNT):
        triplet = values[3 * k : 3 * k + 3]
        if any(v is None for v in triplet):
            continue
        try:
            x, y, c = (float(v) for v in triplet)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{where}: keypoint {k} is not numeric") from exc
        kps[k] = (x, y, c)
    return PoseFrame(kps)


def write_pose_file(poses: list[PoseFrame], path) -> None:
    """Write PoseFrames back out in the keypoint JSON schema."""
    doc = {"frames": [{"keypoints": p.flat()} for p in poses]}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_sequence(seq: FrameSequence, out_dir) -> Path:
    """Write frames as zero-padded frame_%05d.png plus a manifest.json.

    Returns the manifest path. Values that are exact 8-bit multiples
    round-trip losslessly through load_sequence.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for i, frame in enumerate(seq.frames):
        name = f"frame_{i:05d}.png"
        save_frame(frame, out_dir / name)
        names.append(name)
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps({"fps": seq.fps, "frames": names}, indent=2) + "\n")
    return manifest


def load_sequence(frames_dir) -> FrameSequence:
    """Load a frame directory written by write_sequence.

    Without a manifest.json, frame_*.png files are taken in sorted order at
    the default 24 fps.
    """
    frames_dir = Path(frames_dir)
    manifest = frames_dir / "manifest.json"
    if manifest.is_file():
        doc = json.loads(manifest.read_text())
        fps = float(doc.get("fps", 24.0))
        names = doc.get("frames", [])
    else:
        fps = 24.0
        names = sorted(p.name for p in frames_dir.glob("frame_*.png"))
    frames = tuple(load_frame(frames_dir / name) for name in names)
    if frames:
        dims = {(f.height, f.width, f.channels) for f in frames}
        if len(dims) > 1:
            raise DimensionMismatchError(f"frames in {frames_dir} disagree on dimensions")
    return FrameSequence(frames=frames, fps=fps)
