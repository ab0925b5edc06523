"""Dense complex linear algebra and spin-1/2 operator primitives.

All frequencies are angular (rad/s) and all times are in seconds; unit
conversion from file formats happens at the I/O boundary only.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

SX = np.array([[0, 0.5], [0.5, 0]], dtype=np.complex128)
SY = np.array([[0, -0.5j], [0.5j, 0]], dtype=np.complex128)
SZ = np.array([[0.5, 0], [0, -0.5]], dtype=np.complex128)
I2 = np.eye(2, dtype=np.complex128)


@dataclass(frozen=True)
class SpinOperatorSet:
    """Spin-1/2 operators S_a = sigma_a / 2 plus the identity."""

    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    identity: np.ndarray


def spin_half_ops() -> SpinOperatorSet:
    return SpinOperatorSet(SX.copy(), SY.copy(), SZ.copy(), I2.copy())


def kron(a, b):
    """Kronecker product of two square matrices."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape[0] != a.shape[1] or b.shape[0] != b.shape[1]:
        raise ValueError("kron expects square matrices")
    return np.kron(a, b)


def kron_all(*mats):
    """Kronecker product of a sequence of square matrices, left to right."""
    out = np.asarray(mats[0], dtype=np.complex128)
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def expm_generator(g, t: float):
    """exp(-i g t) by scaling-and-squaring Pade(13).

    Works for arbitrary (also non-Hermitian) generators, which is required
    for the augmented block generators used in the derivative computation.
    """
    g = np.asarray(g, dtype=np.complex128)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("generator must be a square matrix")
    if not np.all(np.isfinite(g)) or not np.isfinite(t):
        raise ValueError("non-finite generator or time")
    if t < 0:
        raise ValueError("time must be non-negative")
    return kernels.expm(-1j * t * g)


def rotation(theta: float, phi: float):
    """Single-qubit rotation R_phi(theta) = exp(-i theta (cos phi Sx + sin phi Sy))."""
    axis = np.cos(phi) * SX + np.sin(phi) * SY
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    return c * I2 - 2j * s * axis


def unitary_fidelity(u, v) -> float:
    """Global-phase-invariant overlap |Tr(u v^dag)|^2 / d^2."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ValueError("dimension mismatch in unitary_fidelity")
    d = u.shape[0]
    return float(abs(np.trace(u @ v.conj().T)) ** 2 / d**2)


def frobenius_norm_sq(m) -> float:
    """Sum of |entries|^2."""
    m = np.asarray(m)
    return float(np.sum(np.abs(m) ** 2))
