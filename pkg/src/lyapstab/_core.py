"""Kernel selection: compiled extension if importable, NumPy fallback otherwise.

Set ``LYAPSTAB_PURE_PYTHON=1`` in the environment to force the fallback (used
by the benchmark and by tests that exercise both paths).
"""

import os

if os.environ.get("LYAPSTAB_PURE_PYTHON"):
    from . import _swing_numpy as _backend
else:
    try:
        from . import _swing_core as _backend  # type: ignore[no-redef]
    except ImportError:
        from . import _swing_numpy as _backend  # type: ignore[no-redef]

rk4_swing = _backend.rk4_swing


def backend_name() -> str:
    """'compiled' when the C extension is active, 'numpy' otherwise."""
    return "compiled" if _backend.__name__.endswith("_swing_core") else "numpy"
