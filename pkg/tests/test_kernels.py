import numpy as np
import pytest

from avatarforge._kernels import KERNEL_BACKEND, _pykernels

try:
    from avatarforge._kernels import _cykernels
except ImportError:
    _cykernels = None


def _case(seed, size=48, hole=20):
    rng = np.random.default_rng(seed)
    values = rng.random((size, size))
    mask = np.zeros((size, size), dtype=np.uint8)
    r0 = (size - hole) // 2
    mask[r0 : r0 + hole, r0 : r0 + hole] = 1
    start = values[mask == 0].mean()
    values[mask == 1] = start
    return values, mask


class TestPureKernel:
    def test_converges_on_laplace_problem(self):
        values, mask = _case(1)
        sweeps, last = _pykernels.sor_relax(values, mask, 1.9, 1e-6, 10_000)
        assert last < 1e-6
        assert sweeps < 10_000

    def test_respects_max_sweeps(self):
        values, mask = _case(2)
        sweeps, last = _pykernels.sor_relax(values, mask, 1.9, 0.0, 5)
        assert sweeps == 5


@pytest.mark.skipif(_cykernels is None, reason="compiled kernel not built")
class TestCompiled:
    def test_bitwise_parity_with_pure(self):
        for seed in range(3):
            values_a, mask = _case(seed, size=40, hole=16)
            values_b = values_a.copy()
            s_a, u_a = _pykernels.sor_relax(values_a, mask, 1.9, 1e-6, 10_000)
            s_b, u_b = _cykernels.sor_relax(values_b, mask, 1.9, 1e-6, 10_000)
            assert s_a == s_b
            assert u_a == u_b
            assert np.array_equal(values_a, values_b)

    def test_irregular_mask_parity(self):
        rng = np.random.default_rng(9)
        values_a = rng.random((32, 32))
        mask = (rng.random((32, 32)) > 0.7).astype(np.uint8)
        mask[0, 0] = 0  # keep a boundary
        values_b = values_a.copy()
        _pykernels.sor_relax(values_a, mask, 1.9, 1e-6, 10_000)
        _cykernels.sor_relax(values_b, mask, 1.9, 1e-6, 10_000)
        assert np.array_equal(values_a, values_b)


def test_backend_reported():
    assert KERNEL_BACKEND in ("compiled", "pure-python")
