"""Quadrature-contraction kernels with a compiled core and a numpy fallback.

The Cython extension is used when importable; set OSEENHDG_KERNELS=python or
=cython to force a backend (forcing cython raises if the extension is
missing). Both backends produce identical arrays.
"""

import os

_requested = os.environ.get("OSEENHDG_KERNELS", "auto").lower()

if _requested in ("auto", "cython"):
    try:
        from . import _cykernels as _impl

        backend = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from . import _pykernels as _impl

        backend = "python"
elif _requested == "python":
    from . import _pykernels as _impl

    backend = "python"
else:
    raise ValueError(f"unknown OSEENHDG_KERNELS value {_requested!r}")

volume_blocks = _impl.volume_blocks
edge_blocks = _impl.edge_blocks
