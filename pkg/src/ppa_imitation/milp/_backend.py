"""Pick the compiled kernels at import if available, numpy otherwise.

Set ``PPA_IMITATION_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _assign_py, _lp_py

BACKEND = "python"
lp_solve = _lp_py.lp_solve
assign_solve = _assign_py.assign_solve

if os.environ.get("PPA_IMITATION_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _assign_core, _lp_core
    except ImportError:  # extensions not built
        pass
    else:
        BACKEND = "cython"
        lp_solve = _lp_core.lp_solve
        assign_solve = _assign_core.assign_solve

OPTIMAL = _lp_py.OPTIMAL
INFEASIBLE = _lp_py.INFEASIBLE
UNBOUNDED = _lp_py.UNBOUNDED
ITERATION_LIMIT = _lp_py.ITERATION_LIMIT
