"""Flow-kernel backend selection.

The compiled Cython kernel is preferred; the pure-Python twin is the
fallback. Both expose the same ``solve_min_cost_flow`` and are kept
arithmetically identical (see each module's notes). Set RESTORO_FORCE_PY=1
to force the Python backend, e.g. for the backend-comparison benchmark.
"""

import os

from . import mincost_py

if os.environ.get("RESTORO_FORCE_PY"):
    _impl = mincost_py
else:
    try:
        from . import _mincost as _impl
    except ImportError:
        _impl = mincost_py

solve_min_cost_flow = _impl.solve_min_cost_flow
BACKEND = _impl.BACKEND


def compiled_kernel():
    """The compiled module, or None when only the Python fallback is available."""
    try:
        from . import _mincost
        return _mincost
    except ImportError:
        return None
