"""Backend selection for the clustering kernels.

The compiled extension is preferred when importable; the pure-Python module
is the fallback. Both expose the same four functions with identical
semantics (and bit-identical output). Set ``FEDCLUST_BACKEND=py`` or ``=c``
to force a choice; forcing ``c`` raises if the extension is missing.
"""

import os

_requested = os.environ.get("FEDCLUST_BACKEND", "").strip().lower()

if _requested in ("", "c", "compiled"):
    try:
        from . import _ccore as _impl
        ACTIVE_BACKEND = "c"
    except ImportError:
        if _requested:
            raise
        from . import pycore as _impl
        ACTIVE_BACKEND = "python"
elif _requested in ("py", "python"):
    from . import pycore as _impl
    ACTIVE_BACKEND = "python"
else:
    raise RuntimeError(
        f"unknown FEDCLUST_BACKEND={_requested!r}; expected 'c' or 'py'")

log_marginal = _impl.log_marginal
predictive_logpdf = _impl.predictive_logpdf
gibbs_sweep = _impl.gibbs_sweep
restricted_scan = _impl.restricted_scan

__all__ = [
    "ACTIVE_BACKEND",
    "log_marginal",
    "predictive_logpdf",
    "gibbs_sweep",
    "restricted_scan",
]
