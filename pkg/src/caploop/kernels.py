"""Kernel dispatch: compiled extension when available, pure Python otherwise.

Set CAPLOOP_PURE_PYTHON=1 to force the fallback (used by the benchmark and
for debugging); `BACKEND` reports which implementation is active.
"""

import os

if os.environ.get("CAPLOOP_PURE_PYTHON"):
    from caploop import _kernels_py as _impl
else:
    try:
        from caploop import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from caploop import _kernels_py as _impl

BACKEND: str = _impl.BACKEND

OP_HIT: int = _impl.OP_HIT
OP_SUB: int = _impl.OP_SUB
OP_INS: int = _impl.OP_INS
OP_DEL: int = _impl.OP_DEL

levenshtein_ops = _impl.levenshtein_ops
window_max_abs = _impl.window_max_abs
