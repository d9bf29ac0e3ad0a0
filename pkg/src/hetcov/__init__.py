"""Coverage and rate analysis of multi-tier cellular uplinks with decoupled association."""

import os as _os

# thread override has to be in place before numpy loads its BLAS
_threads = _os.environ.get("HETCOV_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"
