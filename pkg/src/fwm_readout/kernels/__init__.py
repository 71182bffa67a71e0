"""Simulation kernel backends.

The compiled Cython extension is preferred when it imported cleanly; the
NumPy implementation is the fallback and the behavioral reference.  Both
produce bit-identical output, so the choice only affects speed.  The
environment variable ``FWM_READOUT_BACKEND`` (``auto`` | ``python`` |
``compiled``) overrides the default selection.
"""

import os

from . import _pykernels

try:
    from . import _ckernels

    HAVE_COMPILED = True
except ImportError:
    _ckernels = None
    HAVE_COMPILED = False


def get_backend(name=None):
    """Return the kernel module for ``name`` (None/'auto' picks the default)."""
    if name in (None, "auto"):
        return _ckernels if HAVE_COMPILED else _pykernels
    if name == "python":
        return _pykernels
    if name == "compiled":
        if not HAVE_COMPILED:
            raise ImportError("compiled kernels are not available in this installation")
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


_active = get_backend(os.environ.get("FWM_READOUT_BACKEND", "auto"))

BACKEND = _active.BACKEND_NAME

sample_write_block = _active.sample_write_block
sample_readout_block = _active.sample_readout_block
render_block = _active.render_block
