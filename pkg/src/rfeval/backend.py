"""Select the compiled kernel core or the numpy fallback at import time.

``RFEVAL_FORCE_PYTHON=1`` forces the fallback; otherwise the Cython extension
is used when importable. ``BACKEND`` names the active implementation.

The compiled backend only replaces the kernels where it measures faster
(benchmarks/bench_kernels.py): the gather-heavy im2col and the reflected
1-D correlation. Pairwise squared distances reduce to a GEMM and max-pooling
to a strided reduction, which BLAS/numpy already do at memory speed, so those
always use the numpy implementations.
"""

import os

from rfeval import _kernels_py as _py

if os.environ.get("RFEVAL_FORCE_PYTHON") == "1":
    _impl = _py
    BACKEND = "python"
else:
    try:
        from rfeval import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _py
        BACKEND = "python"

im2col_nhwc = _impl.im2col_nhwc
correlate1d_reflect = _impl.correlate1d_reflect
maxpool2d_nhwc = _py.maxpool2d_nhwc
pairwise_sqdist = _py.pairwise_sqdist
