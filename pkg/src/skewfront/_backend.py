"""Select the compiled kernels when available, else the pure-Python ones.

Set SKEWFRONT_BACKEND=python to force the fallback.
"""

import os

if os.environ.get("SKEWFRONT_BACKEND", "").lower() == "python":
    from . import _fallback as impl
else:
    try:
        from . import _core as impl
    except ImportError:  # extension not built
        from . import _fallback as impl

BACKEND = impl.BACKEND


def get(name: str):
    """Backend by name, for benchmarks and equivalence tests."""
    if name == "python":
        from . import _fallback

        return _fallback
    from . import _core

    return _core
