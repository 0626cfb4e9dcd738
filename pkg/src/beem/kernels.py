"""Backend selection for the hot loops.

The compiled ``beem._kernels`` extension is used when importable; otherwise
(or with ``BEEM_PURE_PYTHON=1``) the numpy implementations in
``beem._kernels_py`` are used. ``BACKEND`` names the active one.
"""
import os

from beem import _kernels_py

if os.environ.get("BEEM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from beem import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

hmm_forward = _impl.hmm_forward
hmm_estep = _impl.hmm_estep
sample_rows = _impl.sample_rows

__all__ = ["BACKEND", "hmm_forward", "hmm_estep", "sample_rows"]
