"""Kernel backend selection.

The compiled extension ``_core`` is preferred. Set ``KILLING_INDEX_PURE_PYTHON=1``
to force the numpy fallback (``_pycore``).
"""

import os

from . import _pycore

if os.environ.get("KILLING_INDEX_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pycore
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _pycore
        BACKEND = "python"

triangle_layout = _impl.triangle_layout
cotan_weights = _impl.cotan_weights
edge_lstsq = _impl.edge_lstsq
vertex_scatter = _impl.vertex_scatter
