"""Backend selection for the batched FK kernel.

Prefers the compiled extension; falls back to the NumPy implementation when
the extension was not built.  Set DEXKIN_KERNEL=numpy to force the fallback.
"""

import os

from . import _fk_np

try:
    from . import _fk_cy
except ImportError:
    _fk_cy = None

if _fk_cy is not None and os.environ.get("DEXKIN_KERNEL", "").lower() != "numpy":
    _impl = _fk_cy
    BACKEND = "cython"
else:
    _impl = _fk_np
    BACKEND = "numpy"

batch_tip_positions = _impl.batch_tip_positions


def available_backends() -> dict:
    """Importable kernel modules keyed by backend name."""
    out = {"numpy": _fk_np}
    if _fk_cy is not None:
        out["cython"] = _fk_cy
    return out
