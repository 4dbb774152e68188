"""HTTP adapter: every backend slot POSTs JSON to a model sidecar.

Generator routes are never retried (duplicate generations waste backend
time); the idempotent segment/pose/embed routes retry twice on transport
failures. Requests above 32 MB are rejected client-side.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import Any, Optional

import requests

from ..errors import BackendError, FormatError
from ..media import ImageBuffer, MaskMap, PoseFrame, pose_from_flat
from ..metrics import EmbeddingVector
from . import GenerationRequest
from .wire import (
    generation_request_to_wire,
    image_field,
    image_from_field,
    mask_from_field,
)

REQUEST_CAP_BYTES = 32 * 1024 * 1024
DEFAULT_TIMEOUT = 300.0
IDEMPOTENT_RETRIES = 2
MAX_INFLIGHT_PER_SLOT = 2


class HttpBackend:
    """One sidecar connection; exposes an adapter object per slot."""

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT,
                 max_inflight: int = MAX_INFLIGHT_PER_SLOT):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.session = requests.Session()
        self._slot_limits: dict[str, threading.Semaphore] = {}
        self._max_inflight = max_inflight
        self.text2image = _HttpGenerator(self, "text2image", "/v1/generate")
        self.inpainter = _HttpGenerator(self, "inpainter", "/v1/inpaint")
        self.segmenter = _HttpSegmenter(self)
        self.pose_detector = _HttpPoseDetector(self)
        self.embedder = _HttpEmbedder(self)
        self.captioner = _HttpCaptioner(self)
        self.refiner = _HttpRefiner(self)

    def call(self, slot: str, route: str, payload: dict[str, Any], retries: int) -> dict[str, Any]:
        body = json.dumps(payload).encode("utf-8")
        if len(body) > REQUEST_CAP_BYTES:
            raise BackendError(
                f"request body of {len(body)} bytes exceeds the {REQUEST_CAP_BYTES} byte cap",
                slot=slot, route=route,
            )
        url = self.endpoint + route
        limit = self._slot_limits.setdefault(slot, threading.Semaphore(self._max_inflight))
        attempts = retries + 1
        last_exc: Optional[Exception] = None
        for _ in range(attempts):
            try:
                with limit:
                    resp = self.session.post(
                        url, data=body, timeout=self.timeout,
                        headers={"Content-Type": "application/json"},
                    )
            except requests.RequestException as exc:
                last_exc = exc
                continue
            if resp.status_code != 200:
                detail = resp.text[:200]
                raise BackendError(
                    f"backend returned HTTP {resp.status_code}: {detail}", slot=slot, route=route
                )
            try:
                doc = resp.json()
            except ValueError as exc:
                raise BackendError("backend response is not JSON", slot=slot, route=route) from exc
            if not isinstance(doc, dict):
                raise BackendError("backend response must be a JSON object", slot=slot, route=route)
            return doc
        raise BackendError(f"transport failure: {last_exc}", slot=slot, route=route) from last_exc

    def decode(self, slot: str, route: str, fn, *args):
        try:
            return fn(*args)
        except FormatError as exc:
            raise BackendError(f"schema violation in response: {exc}", slot=slot, route=route) from exc


@dataclass
class _HttpGenerator:
    backend: HttpBackend
    slot: str
    route: str

    def generate(self, request: GenerationRequest) -> ImageBuffer:
        doc = self.backend.call(self.slot, self.route, generation_request_to_wire(request), retries=0)
        return self.backend.decode(self.slot, self.route, image_from_field, doc, "response image")


@dataclass
class _HttpSegmenter:
    backend: HttpBackend
    route: str = "/v1/segment"

    def segment(self, frame: ImageBuffer, background_hint: Optional[ImageBuffer] = None) -> MaskMap:
        payload: dict[str, Any] = image_field(frame)
        if background_hint is not None:
            payload["hint_png_b64"] = image_field(background_hint)["png_b64"]
        doc = self.backend.call("segmenter", self.route, payload, retries=IDEMPOTENT_RETRIES)
        return self.backend.decode("segmenter", self.route, mask_from_field, doc, "response mask")


@dataclass
class _HttpPoseDetector:
    backend: HttpBackend
    route: str = "/v1/pose"

    def detect(self, frame: ImageBuffer) -> PoseFrame:
        doc = self.backend.call("pose_detector", self.route, image_field(frame), retries=IDEMPOTENT_RETRIES)
        return self.backend.decode(
            "pose_detector", self.route, pose_from_flat, doc.get("keypoints"), "pose response"
        )


@dataclass
class _HttpEmbedder:
    backend: HttpBackend

    def _vector(self, slot: str, route: str, doc: dict[str, Any]) -> EmbeddingVector:
        vec = doc.get("vector")
        if not isinstance(vec, list) or not vec:
            raise BackendError("response lacks a vector list", slot=slot, route=route)
        return EmbeddingVector(vec)

    def embed_image(self, image: ImageBuffer) -> EmbeddingVector:
        route = "/v1/embed_image"
        doc = self.backend.call("embedder", route, image_field(image), retries=IDEMPOTENT_RETRIES)
        return self._vector("embedder", route, doc)

    def embed_text(self, text: str) -> EmbeddingVector:
        route = "/v1/embed_text"
        doc = self.backend.call("embedder", route, {"text": text}, retries=IDEMPOTENT_RETRIES)
        return self._vector("embedder", route, doc)


@dataclass
class _HttpCaptioner:
    backend: HttpBackend
    route: str = "/v1/caption"

    def caption(self, image: ImageBuffer) -> str:
        doc = self.backend.call("captioner", self.route, image_field(image), retries=0)
        text = doc.get("text")
        if not isinstance(text, str):
            raise BackendError("caption response lacks a text field", slot="captioner", route=self.route)
        return text


@dataclass
class _HttpRefiner:
    backend: HttpBackend
    route: str = "/v1/refine_prompt"

    def refine(self, instruction: str) -> str:
        doc = self.backend.call("llm_refiner", self.route, {"text": instruction}, retries=0)
        text = doc.get("text")
        if not isinstance(text, str):
            raise BackendError("refine response lacks a text field", slot="llm_refiner", route=self.route)
        return text
