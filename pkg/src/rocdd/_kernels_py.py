"""Pure-numpy propagation kernels.

Fallback used when the compiled extension is unavailable (or disabled via
ROCDD_PURE_PYTHON=1).  Implements the same scaling-and-squaring Pade(13)
matrix exponential as the Cython kernel, batched over the leading axis so
all slices of a piecewise-constant waveform are exponentiated at once.
"""

import numpy as np

# Pade(13) numerator coefficients b_0..b_13 (Higham 2005).
_B = np.array(
    [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ]
)
_THETA13 = 5.371920351148152


def expm(a):
    """Matrix exponential of ``a`` (2-D) or of each matrix in a stack (3-D)."""
    a = np.asarray(a, dtype=np.complex128)
    single = a.ndim == 2
    if single:
        a = a[None]
    if a.size == 0 or a.shape[-1] == 0:
        raise ValueError("empty matrix")

    # One common scaling power for the whole batch: a few extra squarings
    # for the better-conditioned members cost little and keep the batch
    # operations uniform.
    norm1 = np.abs(a).sum(axis=-2).max(axis=-1)
    nmax = float(norm1.max())
    if not np.isfinite(nmax):
        raise ValueError("non-finite entries in matrix exponential input")
    s = int(max(0, np.ceil(np.log2(nmax / _THETA13)))) if nmax > _THETA13 else 0
    a = a / (2.0**s)

    d = a.shape[-1]
    ident = np.eye(d, dtype=np.complex128)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (
        a6 @ (_B[13] * a6 + _B[11] * a4 + _B[9] * a2)
        + _B[7] * a6
        + _B[5] * a4
        + _B[3] * a2
        + _B[1] * ident
    )
    v = (
        a6 @ (_B[12] * a6 + _B[10] * a4 + _B[8] * a2)
        + _B[6] * a6
        + _B[4] * a4
        + _B[2] * a2
        + _B[0] * ident
    )
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r[0] if single else r


def expm_stack(gens, dts):
    """exp(-i G_m dt_m) for every generator in the stack ``gens`` (M, d, d)."""
    gens = np.asarray(gens, dtype=np.complex128)
    dts = np.asarray(dts, dtype=np.float64)
    if dts.ndim == 0:
        dts = np.broadcast_to(dts, gens.shape[:1])
    return expm(gens * (-1j * dts)[:, None, None])


def chain_propagator(gens, dts):
    """Time-ordered product exp(-i G_M dt_M) ... exp(-i G_1 dt_1).

    ``gens`` is a stack (M, d, d) in time order (index 0 acts first).
    """
    mats = expm_stack(gens, dts)
    u = np.eye(mats.shape[-1], dtype=np.complex128)
    for m in mats:
        u = m @ u
    return u
