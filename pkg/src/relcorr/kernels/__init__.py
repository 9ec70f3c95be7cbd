"""Hot kernels, numba-compiled when available.

Set ``RELCORR_DISABLE_NUMBA=1`` to force the pure-numpy implementations.
Both backends expose the same functions and return identical results.
"""

import os

from . import _numpy

if os.environ.get("RELCORR_DISABLE_NUMBA", "").strip() not in ("", "0"):
    backend = _numpy
else:
    try:
        from . import _numba as backend
    except ImportError:  # numba missing or broken
        backend = _numpy

NAME = backend.NAME
union_keys = backend.union_keys
inter_keys = backend.inter_keys
diff_keys = backend.diff_keys
member = backend.member
converse_keys = backend.converse_keys
compose_keys = backend.compose_keys
row_counts = backend.row_counts
bruteforce_equivalence = backend.bruteforce_equivalence

__all__ = ["NAME", "union_keys", "inter_keys", "diff_keys", "member", "converse_keys",
           "compose_keys", "row_counts", "bruteforce_equivalence"]
