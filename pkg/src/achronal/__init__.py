"""Causal localization of the massive scalar boson on spacelike and lightlike hyperplanes."""
from __future__ import annotations

import os

# numba's TBB layer warns when the TBB runtime is too old; workqueue is
# deterministic and sufficient for the fixed-partition loops used here.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

# ACHRONAL_NUM_THREADS caps BLAS as well; it only takes effect when set
# before numpy is first imported.
if os.environ.get("ACHRONAL_NUM_THREADS"):
    for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["ACHRONAL_NUM_THREADS"])

__version__ = "0.1.0"
