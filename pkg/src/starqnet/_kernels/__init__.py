"""Monte Carlo kernel backend selection.

The compiled Cython extension is preferred when importable; the numpy
implementation is the fallback.  Both produce bit-identical results.
Set STARQNET_KERNELS=pure or =compiled to force a backend (the latter
raises if the extension is missing).
"""

import os

from . import _layout as layout
from ._layout import (  # re-exported for callers
    KIND_DARK,
    KIND_DOUBLE,
    KIND_SIGNAL,
)

_choice = os.environ.get("STARQNET_KERNELS", "auto").lower()

if _choice == "pure":
    from . import _pure as _impl
elif _choice == "compiled":
    from . import _core as _impl  # ImportError here is intentional
elif _choice == "auto":
    try:
        from . import _core as _impl
    except ImportError:
        from . import _pure as _impl
else:
    raise ValueError(f"STARQNET_KERNELS must be auto, pure or compiled, not {_choice!r}")

BACKEND = _impl.BACKEND_NAME

bb84_run = _impl.bb84_run
bbm92_run = _impl.bbm92_run
mdi_run = _impl.mdi_run
ghz_run = _impl.ghz_run
