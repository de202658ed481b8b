"""Kernel-lane selection: numba-compiled hot loops with a pure-numpy fallback.

The environment flag KADBAYM_PURE_NUMPY=1 forces the numpy lane; otherwise
the numba lane is used when numba imports successfully.  Both lanes expose
the same functions with identical semantics (see _kernels_np for the
reference implementations).
"""

from __future__ import annotations

import os

from . import _kernels_np

_PURE_NUMPY = os.environ.get("KADBAYM_PURE_NUMPY", "0") == "1"

if not _PURE_NUMPY:
    try:
        from . import _kernels_nb as _impl
        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
        _impl = _kernels_np
        HAVE_NUMBA = False
else:
    _impl = _kernels_np
    HAVE_NUMBA = False

ACTIVE_LANE = "numba" if (_impl is not _kernels_np) else "numpy"


def get_lane(pure_numpy: bool | None = None):
    """Return the active kernel module (or the requested one)."""
    if pure_numpy is None:
        return _impl
    return _kernels_np if pure_numpy else _impl


# re-exported kernel entry points (resolved at import time)
conv_mat = _impl.conv_mat
tv_source = _impl.tv_source
conv_ret_row = _impl.conv_ret_row
conv_tv_row = _impl.conv_tv_row
conv_les_col = _impl.conv_les_col
dyson_ret_row = _impl.dyson_ret_row
dyson_ret_row_para = _impl.dyson_ret_row_para
dyson_tv_row = _impl.dyson_tv_row
dyson_les_col = _impl.dyson_les_col
dyson_les_col_para = _impl.dyson_les_col_para
vie2_ret_row = _impl.vie2_ret_row
vie2_tv_row = _impl.vie2_tv_row
vie2_les_col = _impl.vie2_les_col
vie2_les_col_para = _impl.vie2_les_col_para

# numpy-only helpers (vectorized already)
bubble1_slice = _kernels_np.bubble1_slice
bubble2_slice = _kernels_np.bubble2_slice
greg_row = _kernels_np.greg_row
greg_w = _kernels_np.greg_w
