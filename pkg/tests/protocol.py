"""Wire-protocol test rig: a reference echo server plus reusable checks.

The stub server implements the documented echo semantics of every route;
the check functions exercise a live server (this stub or a real sidecar)
through the primary HTTP adapter, so the same suite validates protocol
conformance on both sides.
"""

from __future__ import annotations

import base64
import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from avatarforge.backends import GenerationRequest, http_suite
from avatarforge.backends.wire import decode_png, encode_png
from avatarforge.media import ImageBuffer, MaskMap, PoseFrame


def _solid_png_b64(width: int, height: int, level: int = 128) -> str:
    img = ImageBuffer(np.full((height, width, 3), level / 255.0))
    return base64.b64encode(encode_png(img)).decode("ascii")


def _center_mask_png_b64(width: int, height: int) -> str:
    mask = np.zeros((height, width))
    mask[height // 4 : height - height // 4, width // 4 : width - width // 4] = 1.0
    return base64.b64encode(encode_png(ImageBuffer(mask))).decode("ascii")


def _line_pose(width: int, height: int) -> list[float]:
    flat = []
    for k in range(18):
        flat += [width / 2.0, (k + 1) * height / 19.0, 1.0]
    return flat


def _hash_vector(data: bytes, dim: int = 64) -> list[float]:
    rng = np.random.default_rng(int.from_bytes(hashlib.sha256(data).digest()[:8], "big"))
    v = rng.standard_normal(dim)
    return (v / np.linalg.norm(v)).tolist()


class _StubHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        server = self.server
        server.call_counts[self.path] = server.call_counts.get(self.path, 0) + 1
        rule = server.fail_rules.get(self.path)
        if rule is not None:
            after, status = rule
            if server.call_counts[self.path] > after:
                self._reply(status, {"error": "injected failure"})
                return
        length = int(self.headers.get("Content-Length", 0))
        try:
            doc = json.loads(self.rfile.read(length))
        except json.JSONDecodeError:
            self._reply(400, {"error": "body is not JSON"})
            return
        try:
            self._route(doc)
        except (KeyError, TypeError, ValueError) as exc:
            self._reply(400, {"error": f"schema violation: {exc}"})

    def _dims_of(self, png_b64: str) -> tuple[int, int]:
        img = decode_png(base64.b64decode(png_b64))
        return img.width, img.height

    def _route(self, doc):
        path = self.path
        if path in ("/v1/generate", "/v1/inpaint"):
            if path == "/v1/inpaint" and (not doc.get("init_image") or not doc.get("mask")):
                self._reply(400, {"error": "inpaint needs init_image and mask"})
                return
            if doc.get("init_image"):
                self._reply(200, {"png_b64": doc["init_image"]["png_b64"]})
            else:
                self._reply(200, {"png_b64": _solid_png_b64(int(doc["width"]), int(doc["height"]))})
        elif path == "/v1/segment":
            w, h = self._dims_of(doc["png_b64"])
            self._reply(200, {"png_b64": _center_mask_png_b64(w, h)})
        elif path == "/v1/pose":
            w, h = self._dims_of(doc["png_b64"])
            self._reply(200, {"keypoints": _line_pose(w, h)})
        elif path == "/v1/embed_image":
            if self.server.fixed_vector is not None:
                self._reply(200, {"vector": self.server.fixed_vector})
            else:
                self._reply(200, {"vector": _hash_vector(doc["png_b64"].encode())})
        elif path == "/v1/embed_text":
            self._reply(200, {"vector": _hash_vector(doc["text"].encode())})
        elif path == "/v1/caption":
            digest = hashlib.sha256(doc["png_b64"].encode()).hexdigest()[:10]
            self._reply(200, {"text": f"stub caption {digest}"})
        elif path == "/v1/refine_prompt":
            self._reply(200, {"text": doc["text"]})
        else:
            self._reply(404, {"error": f"unknown route {path}"})

    def _reply(self, status: int, doc: dict):
        body = json.dumps(doc).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class ProtocolStubServer:
    """Reference echo server; use as a context manager."""

    def __init__(self, fail_rules=None, fixed_vector=None):
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
        self.httpd.fail_rules = fail_rules or {}
        self.httpd.fixed_vector = fixed_vector
        self.httpd.call_counts = {}
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self.httpd.server_address
        return f"http://{host}:{port}"

    @property
    def call_counts(self):
        return self.httpd.call_counts

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()


# ---------------------------------------------------------------------------
# Reusable conformance checks: run against any live server speaking the
# protocol (the stub above, or the sidecar in echo mode).
# ---------------------------------------------------------------------------

def _checker_image(seed: int = 5, size: int = 32) -> ImageBuffer:
    rng = np.random.default_rng(seed)
    return ImageBuffer(rng.integers(0, 256, (size, size, 3)) / 255.0)


def check_generate(endpoint: str) -> None:
    suite = http_suite(endpoint)
    out = suite.text2image.generate(GenerationRequest(prompt="conformance", width=40, height=24))
    assert (out.width, out.height) == (40, 24)


def check_inpaint_echoes_init(endpoint: str) -> None:
    suite = http_suite(endpoint)
    init = _checker_image(7)
    mask = MaskMap(np.ones((init.height, init.width)))
    out = suite.inpainter.generate(
        GenerationRequest(prompt="conformance", init_image=init, mask=mask)
    )
    assert np.array_equal(out.data, init.data), "echo inpaint must return init_image unchanged"


def check_segment(endpoint: str) -> None:
    suite = http_suite(endpoint)
    frame = _checker_image(9, size=48)
    mask = suite.segmenter.segment(frame)
    assert (mask.height, mask.width) == (48, 48)
    assert mask.data.any(), "echo segment mask must be nonempty"


def check_pose(endpoint: str) -> None:
    suite = http_suite(endpoint)
    pose = suite.pose_detector.detect(_checker_image(11, size=64))
    assert isinstance(pose, PoseFrame)
    assert pose.keypoints.shape == (18, 3)


def check_embed_image(endpoint: str) -> None:
    suite = http_suite(endpoint)
    img = _checker_image(13)
    a = suite.embedder.embed_image(img)
    b = suite.embedder.embed_image(img)
    assert a.values.size >= 1
    assert np.array_equal(a.values, b.values), "embedding must be deterministic"


def check_embed_text(endpoint: str) -> None:
    suite = http_suite(endpoint)
    a = suite.embedder.embed_text("conformance text")
    b = suite.embedder.embed_text("conformance text")
    assert np.array_equal(a.values, b.values)


def check_caption(endpoint: str) -> None:
    suite = http_suite(endpoint)
    text = suite.captioner.caption(_checker_image(17))
    assert isinstance(text, str) and text


def check_refine(endpoint: str) -> None:
    suite = http_suite(endpoint)
    text = suite.llm_refiner.refine("describe the clothes")
    assert isinstance(text, str) and text


ALL_ROUTE_CHECKS = (
    check_generate,
    check_inpaint_echoes_init,
    check_segment,
    check_pose,
    check_embed_image,
    check_embed_text,
    check_caption,
    check_refine,
)
