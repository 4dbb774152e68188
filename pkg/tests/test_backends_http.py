import base64

import numpy as np
import pytest

from avatarforge.backends import GenerationRequest, http_suite
from avatarforge.backends.http import REQUEST_CAP_BYTES, HttpBackend
from avatarforge.backends.wire import encode_png, image_field
from avatarforge.errors import BackendError
from avatarforge.media import ImageBuffer, MaskMap
from protocol import ALL_ROUTE_CHECKS, ProtocolStubServer


@pytest.fixture(scope="module")
def stub():
    with ProtocolStubServer() as server:
        yield server


class TestAdapter:
    def test_embed_fixed_vector_pass_through(self):
        vector = [0.5, -0.25, 0.25, 0.75]
        with ProtocolStubServer(fixed_vector=vector) as server:
            suite = http_suite(server.endpoint)
            out = suite.embedder.embed_image(ImageBuffer(np.zeros((8, 8, 3))))
            assert out.values.tolist() == vector

    def test_500_names_the_slot(self):
        with ProtocolStubServer(fail_rules={"/v1/embed_image": (0, 500)}) as server:
            suite = http_suite(server.endpoint)
            with pytest.raises(BackendError) as err:
                suite.embedder.embed_image(ImageBuffer(np.zeros((8, 8, 3))))
            assert err.value.slot == "embedder"
            assert err.value.route == "/v1/embed_image"
            assert "500" in str(err.value)

    def test_oversized_request_rejected_client_side(self):
        backend = HttpBackend("http://127.0.0.1:9")  # never reached
        blob = "A" * (REQUEST_CAP_BYTES + 1)
        with pytest.raises(BackendError) as err:
            backend.call("embedder", "/v1/embed_image", {"blob": blob}, retries=0)
        assert "cap" in str(err.value)

    def test_generator_not_retried(self, stub):
        with ProtocolStubServer(fail_rules={"/v1/generate": (0, 500)}) as server:
            suite = http_suite(server.endpoint)
            with pytest.raises(BackendError):
                suite.text2image.generate(GenerationRequest(prompt="x", width=16, height=16))
            assert server.call_counts["/v1/generate"] == 1

    def test_image_payload_byte_equality(self, stub):
        rng = np.random.default_rng(80)
        init = ImageBuffer(rng.integers(0, 256, (24, 24, 3)) / 255.0)
        sent_b64 = image_field(init)["png_b64"]
        suite = http_suite(stub.endpoint)
        out = suite.inpainter.generate(
            GenerationRequest(prompt="echo", init_image=init, mask=MaskMap(np.ones((24, 24))))
        )
        # The echo server returns the request bytes; re-encoding the decoded
        # response must reproduce them exactly.
        assert base64.b64encode(encode_png(out)).decode() == sent_b64
        assert np.array_equal(out.data, init.data)

    def test_transport_failure_carries_slot(self):
        suite = http_suite("http://127.0.0.1:1")  # closed port
        with pytest.raises(BackendError) as err:
            suite.embedder.embed_text("x")
        assert err.value.slot == "embedder"

    def test_non_json_response_is_backend_error(self, stub):
        # /v1/unknown returns 404 with a JSON body; adapter maps to BackendError
        backend = HttpBackend(stub.endpoint)
        with pytest.raises(BackendError):
            backend.call("x", "/v1/unknown", {}, retries=0)


class TestProtocolFixtureSuite:
    """The 8-route conformance checks against the reference stub."""

    @pytest.mark.parametrize("check", ALL_ROUTE_CHECKS, ids=lambda c: c.__name__)
    def test_route(self, stub, check):
        check(stub.endpoint)
