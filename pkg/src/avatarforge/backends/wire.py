"""Wire-format encoding shared by the HTTP adapter and protocol tests.

All routes carry JSON; images travel as base64-encoded 8-bit PNGs inside
``{"png_b64": "..."}`` objects. Request objects mirror GenerationRequest
field names. Poses use the flat keypoint layout from the pose-file schema.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
from typing import Any, Optional

import numpy as np
from PIL import Image

from ..errors import FormatError
from ..media import ImageBuffer, MaskMap, PoseFrame, pose_from_flat

ROUTES = (
    "/v1/generate",
    "/v1/inpaint",
    "/v1/segment",
    "/v1/pose",
    "/v1/embed_image",
    "/v1/embed_text",
    "/v1/caption",
    "/v1/refine_prompt",
)


def encode_png(image: ImageBuffer) -> bytes:
    arr = np.rint(image.data * 255.0).astype(np.uint8)
    pil = Image.fromarray(arr[:, :, 0], mode="L") if image.channels == 1 else Image.fromarray(arr, mode="RGB")
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> ImageBuffer:
    try:
        with Image.open(io.BytesIO(data)) as pil:
            if pil.mode == "P":
                pil = pil.convert("RGB")
            if pil.mode in ("RGBA", "LA"):
                arr = np.asarray(pil)[:, :, :-1]
            elif pil.mode in ("RGB", "L"):
                arr = np.asarray(pil)
            else:
                raise FormatError(f"unsupported PNG mode {pil.mode!r} on the wire")
    except (OSError, ValueError) as exc:
        raise FormatError(f"payload is not a decodable PNG: {exc}") from exc
    if arr.dtype != np.uint8:
        raise FormatError("wire PNGs must be 8-bit")
    if arr.ndim == 3 and arr.shape[2] == 2:
        arr = arr[:, :, :1]
    return ImageBuffer(arr.astype(np.float64) / 255.0)


def image_field(image: ImageBuffer) -> dict[str, str]:
    return {"png_b64": base64.b64encode(encode_png(image)).decode("ascii")}


def mask_field(mask: MaskMap) -> dict[str, str]:
    return image_field(ImageBuffer(mask.data))


def image_from_field(obj: Any, where: str) -> ImageBuffer:
    if not isinstance(obj, dict) or not isinstance(obj.get("png_b64"), str):
        raise FormatError(f"{where}: expected an object with a png_b64 string")
    try:
        raw = base64.b64decode(obj["png_b64"], validate=True)
    except Exception as exc:
        raise FormatError(f"{where}: invalid base64 payload") from exc
    return decode_png(raw)


def mask_from_field(obj: Any, where: str) -> MaskMap:
    img = image_from_field(obj, where)
    data = img.data[:, :, 0] if img.channels == 1 else img.data.mean(axis=2)
    return MaskMap(data)


def generation_request_to_wire(request) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "prompt": request.prompt,
        "negative_prompt": request.negative_prompt,
        "pose": {"keypoints": request.pose.flat()} if request.pose is not None else None,
        "prev_frame": image_field(request.prev_frame) if request.prev_frame is not None else None,
        "init_image": image_field(request.init_image) if request.init_image is not None else None,
        "mask": mask_field(request.mask) if request.mask is not None else None,
        "guidance_scale": request.guidance_scale,
        "steps": request.steps,
        "seed": request.seed,
        "width": request.width,
        "height": request.height,
    }
    return doc


def generation_request_from_wire(doc: dict[str, Any]):
    from . import GenerationRequest

    if not isinstance(doc, dict) or not isinstance(doc.get("prompt"), str):
        raise FormatError("generation request must carry a prompt string")
    pose: Optional[PoseFrame] = None
    if doc.get("pose") is not None:
        pose_obj = doc["pose"]
        if not isinstance(pose_obj, dict):
            raise FormatError("pose must be an object with a keypoints list")
        pose = pose_from_flat(pose_obj.get("keypoints"), where="generation request pose")
    prev = image_from_field(doc["prev_frame"], "prev_frame") if doc.get("prev_frame") else None
    init = image_from_field(doc["init_image"], "init_image") if doc.get("init_image") else None
    mask = mask_from_field(doc["mask"], "mask") if doc.get("mask") else None
    return GenerationRequest(
        prompt=doc["prompt"],
        negative_prompt=doc.get("negative_prompt", "") or "",
        pose=pose,
        prev_frame=prev,
        init_image=init,
        mask=mask,
        guidance_scale=float(doc.get("guidance_scale", 7.5)),
        steps=int(doc.get("steps", 25)),
        seed=int(doc.get("seed", 0)),
        width=int(doc.get("width", 512)),
        height=int(doc.get("height", 512)),
    )


def request_digest(payload: dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a wire request."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def image_digest(image: ImageBuffer) -> str:
    """SHA-256 of an image's PNG encoding (stable for 8-bit-exact buffers)."""
    return hashlib.sha256(encode_png(image)).hexdigest()
