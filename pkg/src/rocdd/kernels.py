"""Kernel backend selection.

The compiled extension (``rocdd._kernels``) and the numpy fallback
(``rocdd._kernels_py``) implement the same Pade(13) scaling-and-squaring
exponential and slice-chain product.  The compiled path wins for the small
matrices (d <= 32) that dominate pulse propagation; large joint-space
matrices are always routed to numpy, whose BLAS-backed matmul is faster
there.  Set ROCDD_PURE_PYTHON=1 to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

_FORCE_PY = os.environ.get("ROCDD_PURE_PYTHON", "") not in ("", "0")

_ext = None
if not _FORCE_PY:
    try:
        from . import _kernels as _ext
    except ImportError:
        _ext = None

# Above this dimension the naive compiled matmul loses to BLAS.
_EXT_DIM_LIMIT = 32


def backend() -> str:
    """Name of the active kernel backend ('cython' or 'python')."""
    return "cython" if _ext is not None else "python"


def _impl_for(dim: int):
    if _ext is not None and dim <= _EXT_DIM_LIMIT:
        return _ext
    return _kernels_py


def expm(a):
    """Matrix exponential of a dense complex matrix or stack of matrices."""
    a = np.asarray(a)
    return _impl_for(a.shape[-1]).expm(a)


def expm_stack(gens, dts):
    """exp(-i G_m dt_m) for each generator in the time-ordered stack."""
    gens = np.asarray(gens)
    return _impl_for(gens.shape[-1]).expm_stack(gens, dts)


def chain_propagator(gens, dts):
    """Time-ordered product of slice exponentials exp(-i G_m dt_m)."""
    gens = np.asarray(gens)
    if gens.shape[0] == 0:
        return np.eye(gens.shape[-1], dtype=np.complex128)
    return _impl_for(gens.shape[-1]).chain_propagator(gens, dts)
