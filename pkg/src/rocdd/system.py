"""NV-center electron + nuclear-spin-bath model.

Builds the free (secular) Hamiltonian, the transverse control Hamiltonian
and the static error generators.  Tensor ordering is fixed as
electron (x) nucleus_1 (x) ... (x) nucleus_n.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .linalg import I2, SX, SY, SZ, kron_all

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class NuclearSpin:
    """Hyperfine couplings of one bath spin, in rad/s."""

    a_zz: float
    a_zx: float

    def __post_init__(self):
        if not (np.isfinite(self.a_zz) and np.isfinite(self.a_zx)):
            raise ValueError("hyperfine couplings must be finite")


@dataclass(frozen=True)
class SpinSystem:
    """Central electron spin plus nuclear bath and drive limits.

    omega_i   nuclear Larmor frequency (rad/s)
    omega_max maximum Rabi frequency (rad/s)
    delta_max maximum detuning (rad/s)
    t_min     minimum pulse switching time (s)
    """

    nuclei: tuple
    omega_i: float
    omega_max: float
    delta_max: float
    t_min: float

    def __post_init__(self):
        if self.omega_max <= 0 or self.t_min <= 0:
            raise ValueError("omega_max and t_min must be positive")
        object.__setattr__(self, "nuclei", tuple(self.nuclei))

    @property
    def n_nuclei(self) -> int:
        return len(self.nuclei)

    @property
    def dim(self) -> int:
        return 2 ** (1 + len(self.nuclei))

    def without_nuclei(self) -> "SpinSystem":
        return SpinSystem((), self.omega_i, self.omega_max, self.delta_max, self.t_min)

    def with_nuclei(self, nuclei) -> "SpinSystem":
        return SpinSystem(tuple(nuclei), self.omega_i, self.omega_max,
                          self.delta_max, self.t_min)


@dataclass(frozen=True)
class ErrorModel:
    """Static detuning fraction eps1 and amplitude-scaling fraction eps2."""

    eps1: float = 0.0
    eps2: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.eps1) and np.isfinite(self.eps2)):
            raise ValueError("error fractions must be finite")


NO_ERROR = ErrorModel(0.0, 0.0)


def electron_op(sys: SpinSystem, op):
    """Embed an electron operator as op (x) I on the joint space."""
    if sys.n_nuclei == 0:
        return np.array(op, dtype=np.complex128)
    return np.kron(op, np.eye(2**sys.n_nuclei, dtype=np.complex128))


def nuclear_op(sys: SpinSystem, j: int, op):
    """Embed a single-nucleus operator on the joint space."""
    if j >= sys.n_nuclei:
        raise IndexError("nuclear index out of range")
    factors = [I2] * (1 + sys.n_nuclei)
    factors[1 + j] = op
    return kron_all(*factors)


def free_hamiltonian(sys: SpinSystem):
    """Secular Hamiltonian: sum_j Omega_I Iz_j + (Sz + 1/2)(Azz_j Iz_j + Azx_j Ix_j).

    The two-level electron is a pseudo-spin for the {m=0, m=1} manifold of
    the defect spin, where the hyperfine coupling acts as a projector on the
    m=1 level: Sz + 1/2.  The mean-coupling half therefore shifts the nuclear
    Zeeman term, and each nucleus precesses at Omega_I (electron in m=0) or
    at roughly Omega_I + a_zz (electron in m=1), putting the conditional
    average at the effective Larmor frequency Omega_I + a_zz/2.
    """
    h = np.zeros((sys.dim, sys.dim), dtype=np.complex128)
    proj = electron_op(sys, SZ) + 0.5 * np.eye(sys.dim)
    for j, nuc in enumerate(sys.nuclei):
        h += sys.omega_i * nuclear_op(sys, j, SZ)
        h += nuc.a_zz * (proj @ nuclear_op(sys, j, SZ))
        h += nuc.a_zx * (proj @ nuclear_op(sys, j, SX))
    return h


def coupling_hamiltonian(sys: SpinSystem):
    """Electron-bath coupling only: sum_j Sz (Azz_j Iz_j + Azx_j Ix_j).

    This is the system-environment term whose directional derivatives are
    penalized during pulse optimization; the nuclear Zeeman part and the
    mean-coupling half (both purely nuclear operators that no electron
    drive can affect) are excluded.
    """
    h = np.zeros((sys.dim, sys.dim), dtype=np.complex128)
    for j, nuc in enumerate(sys.nuclei):
        h += nuc.a_zz * (electron_op(sys, SZ) @ nuclear_op(sys, j, SZ))
        h += nuc.a_zx * (electron_op(sys, SZ) @ nuclear_op(sys, j, SX))
    return h


def control_hamiltonian(sys: SpinSystem, ux: float, uy: float, tolerance: float = 1e-9):
    """H_C = ux Sx + uy Sy embedded on the joint space."""
    amp = math.hypot(ux, uy)
    if amp > sys.omega_max * (1.0 + tolerance):
        raise ValueError(
            f"control amplitude {amp:.6g} rad/s exceeds omega_max {sys.omega_max:.6g}"
        )
    return electron_op(sys, ux * SX + uy * SY)


def error_generators(sys: SpinSystem, ux: float, uy: float):
    """Noise generators V1 = Delta_max Sz (x) I and V2 = H_C(ux, uy)."""
    v1 = sys.delta_max * electron_op(sys, SZ)
    v2 = control_hamiltonian(sys, ux, uy)
    return v1, v2


def effective_larmor(sys: SpinSystem, j: int) -> float:
    """Effective Larmor frequency omega_I + a_zz/2 of nucleus j (rad/s)."""
    if j >= sys.n_nuclei:
        raise IndexError("nuclear index out of range")
    return sys.omega_i + sys.nuclei[j].a_zz / 2.0


def free_propagator(sys: SpinSystem, err: ErrorModel, t: float):
    """exp(-i (H_free + eps1 Delta_max Sz (x) I) t).

    Exploits the block-diagonal structure in the electron basis: each block
    is a tensor product of independent single-nucleus evolutions, so the
    cost stays linear in the number of nuclei instead of exponential-cubed.
    """
    if t < 0:
        raise ValueError("free evolution time must be non-negative")
    n = sys.n_nuclei
    det = err.eps1 * sys.delta_max
    if n == 0:
        phase = np.exp(-1j * det * t / 2.0)
        return np.diag([phase, np.conj(phase)]).astype(np.complex128)
    blocks = []
    for e_sign in (+0.5, -0.5):
        weight = e_sign + 0.5  # hyperfine projector on the m=1 level
        gens = np.array(
            [
                sys.omega_i * SZ + weight * (nuc.a_zz * SZ + nuc.a_zx * SX)
                for nuc in sys.nuclei
            ]
        )
        facs = kernels.expm_stack(gens, t)
        block = facs[0]
        for f in facs[1:]:
            block = np.kron(block, f)
        blocks.append(np.exp(-1j * e_sign * det * t) * block)
    dim_n = 2**n
    out = np.zeros((2 * dim_n, 2 * dim_n), dtype=np.complex128)
    out[:dim_n, :dim_n] = blocks[0]
    out[dim_n:, dim_n:] = blocks[1]
    return out


# --- file format -----------------------------------------------------------

_SYSTEM_FIELDS = {
    "b_field_gauss",
    "gamma_i_khz_per_gauss",
    "omega_max_mhz",
    "delta_max_mhz",
    "t_min_ns",
    "nuclei",
}


def system_from_dict(cfg: dict) -> SpinSystem:
    """Build a SpinSystem from the JSON description (linear frequency units)."""
    unknown = set(cfg) - _SYSTEM_FIELDS
    if unknown:
        raise ValueError(f"unknown system fields: {sorted(unknown)}")
    try:
        b = float(cfg["b_field_gauss"])
        gamma = float(cfg["gamma_i_khz_per_gauss"])
        omega_max = float(cfg["omega_max_mhz"])
        delta_max = float(cfg["delta_max_mhz"])
        t_min = float(cfg["t_min_ns"])
    except KeyError as exc:
        raise ValueError(f"missing system field: {exc.args[0]}") from exc
    nuclei = []
    for entry in cfg.get("nuclei", []):
        extra = set(entry) - {"a_zz_khz", "a_zx_khz"}
        if extra:
            raise ValueError(f"unknown nucleus fields: {sorted(extra)}")
        nuclei.append(
            NuclearSpin(
                a_zz=TWO_PI * 1e3 * float(entry["a_zz_khz"]),
                a_zx=TWO_PI * 1e3 * float(entry["a_zx_khz"]),
            )
        )
    return SpinSystem(
        nuclei=tuple(nuclei),
        omega_i=TWO_PI * 1e3 * gamma * b,
        omega_max=TWO_PI * 1e6 * omega_max,
        delta_max=TWO_PI * 1e6 * delta_max,
        t_min=1e-9 * t_min,
    )


def system_from_file(path) -> SpinSystem:
    with open(path) as fh:
        return system_from_dict(json.load(fh))


def default_system(nuclei=(), b_field_gauss: float = 400.0) -> SpinSystem:
    """Published drive limits with a configurable bath.

    gamma_I = 2pi x 1.071 kHz/G, Omega_max = Delta_max = 2pi x 25 MHz,
    t_min = 1 ns.
    """
    return SpinSystem(
        nuclei=tuple(nuclei),
        omega_i=TWO_PI * 1.071e3 * b_field_gauss,
        omega_max=TWO_PI * 25e6,
        delta_max=TWO_PI * 25e6,
        t_min=1e-9,
    )
