"""Relaxation kernels with a compiled fast path.

The Cython extension is used when it has been built (``python setup.py
build_ext --inplace``); otherwise the pure-Python twin takes over. Both
paths perform the identical arithmetic in the identical sweep order, so
results are bitwise equal. Set ``AVATARFORGE_PURE=1`` to force the pure
path (used by the benchmark and the parity test).
"""

import os

from . import _pykernels

if os.environ.get("AVATARFORGE_PURE") == "1":
    _impl = _pykernels
else:
    try:
        from . import _cykernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykernels

sor_relax = _impl.sor_relax
KERNEL_BACKEND = "compiled" if _impl.__name__.endswith("_cykernels") else "pure-python"

__all__ = ["sor_relax", "KERNEL_BACKEND"]
