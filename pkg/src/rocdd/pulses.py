"""Shaped, square and composite control pulses.

A ShapedPulse is a piecewise-constant two-quadrature waveform; composite
pulses (CORPSE, BB1) are specs of square-segment rotations that expand to
ShapedPulse slices, so one propagation path serves every pulse family.
A pulse with zero slices is treated as an ideal instantaneous rotation.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .linalg import SX, SY, SZ, rotation
from .system import ErrorModel, SpinSystem, control_hamiltonian, electron_op, free_hamiltonian

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ShapedPulse:
    """Piecewise-constant control waveform with a target rotation label.

    dt            seconds per slice
    slices        array (M, 2) of (ux, uy) amplitudes in rad/s
    target_theta  intended rotation angle (rad)
    target_phi    intended rotation phase (rad)
    """

    dt: float
    slices: np.ndarray
    target_theta: float
    target_phi: float = 0.0

    def __post_init__(self):
        arr = np.array(self.slices, dtype=np.float64).reshape(-1, 2)
        arr.setflags(write=False)
        object.__setattr__(self, "slices", arr)
        if self.dt < 0:
            raise ValueError("dt must be non-negative")

    @property
    def n_slices(self) -> int:
        return self.slices.shape[0]

    @property
    def duration(self) -> float:
        return self.dt * self.n_slices

    @property
    def is_ideal(self) -> bool:
        return self.n_slices == 0

    def amplitudes(self) -> np.ndarray:
        return np.hypot(self.slices[:, 0], self.slices[:, 1])

    def max_amplitude(self) -> float:
        return float(self.amplitudes().max()) if self.n_slices else 0.0


@dataclass(frozen=True)
class CompositeSpec:
    """Square-segment composite rotation.

    Segments are listed in operator order (leftmost factor first), i.e. the
    last segment acts first in time.
    """

    segments: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    def total_angle(self) -> float:
        return sum(theta for theta, _ in self.segments)


def ideal_pulse(theta: float, phi: float = 0.0) -> ShapedPulse:
    """Instantaneous ideal rotation; propagates to R_phi(theta) exactly."""
    return ShapedPulse(dt=0.0, slices=np.empty((0, 2)), target_theta=theta, target_phi=phi)


def square_pulse(theta: float, phi: float, omega: float, dt: float) -> ShapedPulse:
    """Constant-amplitude pulse at phase phi realizing R_phi(theta).

    The width theta/omega is rounded up to a whole number of dt slices and
    the amplitude rescaled so the total rotation angle stays exactly theta.
    """
    if not (theta > 0 and math.isfinite(theta)):
        raise ValueError("theta must be positive")
    if omega <= 0 or dt <= 0:
        raise ValueError("omega and dt must be positive")
    width = theta / omega
    if width < dt:
        raise ValueError("pulse width shorter than one slice")
    n = int(math.ceil(width / dt - 1e-12))
    eff_omega = theta / (n * dt)
    slices = np.tile([eff_omega * math.cos(phi), eff_omega * math.sin(phi)], (n, 1))
    return ShapedPulse(dt=dt, slices=slices, target_theta=theta, target_phi=phi)


def corpse(theta: float) -> CompositeSpec:
    """CORPSE composite: R0(t/2-t') R_pi(2pi-2t') R0(2pi+t/2-t'), t'=asin(sin(t/2)/2)."""
    if not 0 < theta <= math.pi:
        raise ValueError("theta must lie in (0, pi]")
    tp = math.asin(math.sin(theta / 2) / 2)
    return CompositeSpec(
        segments=(
            (theta / 2 - tp, 0.0),
            (2 * math.pi - 2 * tp, math.pi),
            (2 * math.pi + theta / 2 - tp, 0.0),
        )
    )


def bb1(theta: float) -> CompositeSpec:
    """BB1 composite: R_f(pi) R_3f(2pi) R_f(pi) R0(theta), f = acos(-theta/4pi)."""
    if not 0 < theta <= math.pi:
        raise ValueError("theta must lie in (0, pi]")
    fp = math.acos(-theta / (4 * math.pi))
    return CompositeSpec(
        segments=((math.pi, fp), (2 * math.pi, 3 * fp), (math.pi, fp), (theta, 0.0))
    )


def composite_to_pulse(spec: CompositeSpec, omega: float, dt: float,
                       target_theta: float, target_phi: float = 0.0) -> ShapedPulse:
    """Expand composite segments into ShapedPulse slices at amplitude omega.

    Segments act last-to-first in time, so the slice list is built from the
    reversed segment tuple.
    """
    parts = []
    for theta, phi in reversed(spec.segments):
        seg = square_pulse(theta, phi + target_phi, omega, dt)
        parts.append(seg.slices)
    return ShapedPulse(
        dt=dt,
        slices=np.concatenate(parts, axis=0),
        target_theta=target_theta,
        target_phi=target_phi,
    )


def phase_shift(p: ShapedPulse, phi: float) -> ShapedPulse:
    """Rotate every slice in the xy-plane by phi; shifts the target phase."""
    if p.is_ideal:
        return ideal_pulse(p.target_theta, p.target_phi + phi)
    c, s = math.cos(phi), math.sin(phi)
    rot = np.array([[c, -s], [s, c]])
    return ShapedPulse(
        dt=p.dt,
        slices=p.slices @ rot.T,
        target_theta=p.target_theta,
        target_phi=p.target_phi + phi,
    )


def scale_amplitude(p: ShapedPulse, factor: float) -> ShapedPulse:
    """Uniformly scale all slice amplitudes (used by Gaussian-modulated DD)."""
    if p.is_ideal:
        return p
    return ShapedPulse(dt=p.dt, slices=p.slices * factor,
                       target_theta=p.target_theta, target_phi=p.target_phi)


def slice_generators(p: ShapedPulse, sys: SpinSystem, err: ErrorModel,
                     include_bath: bool) -> np.ndarray:
    """Per-slice Hamiltonians including amplitude and detuning errors.

    With include_bath=False the generators live on the bare electron space
    (dim 2); with include_bath=True on the joint space with the free
    Hamiltonian added.
    """
    space_sys = sys if include_bath else sys.without_nuclei()
    d = space_sys.dim
    gens = np.empty((p.n_slices, d, d), dtype=np.complex128)
    static = err.eps1 * sys.delta_max * electron_op(space_sys, SZ)
    if include_bath:
        static = static + free_hamiltonian(space_sys)
    scale = 1.0 + err.eps2
    hx = electron_op(space_sys, SX)
    hy = electron_op(space_sys, SY)
    for m, (ux, uy) in enumerate(p.slices):
        gens[m] = static + scale * (ux * hx + uy * hy)
    return gens


def pulse_propagator(p: ShapedPulse, sys: SpinSystem, err: ErrorModel = ErrorModel(),
                     include_bath: bool = False) -> np.ndarray:
    """Time-ordered propagator of the pulse under static errors.

    Ideal (zero-slice) pulses return the exact target rotation and ignore
    the error model.
    """
    space_sys = sys if include_bath else sys.without_nuclei()
    if p.is_ideal:
        return electron_op(space_sys, rotation(p.target_theta, p.target_phi))
    gens = slice_generators(p, sys, err, include_bath)
    return kernels.chain_propagator(gens, p.dt)


def target_rotation(p: ShapedPulse) -> np.ndarray:
    """The rotation R_phi(theta) the pulse is labelled with (dim 2)."""
    return rotation(p.target_theta, p.target_phi)


# --- file format -----------------------------------------------------------

_PULSE_FIELDS = {"dt_ns", "slices_mhz", "target_theta_rad", "target_phi_rad"}


def pulse_to_dict(p: ShapedPulse) -> dict:
    return {
        "dt_ns": p.dt * 1e9,
        "slices_mhz": [[ux / (TWO_PI * 1e6), uy / (TWO_PI * 1e6)] for ux, uy in p.slices],
        "target_theta_rad": p.target_theta,
        "target_phi_rad": p.target_phi,
    }


def pulse_from_dict(cfg: dict) -> ShapedPulse:
    unknown = set(cfg) - _PULSE_FIELDS
    if unknown:
        raise ValueError(f"unknown pulse fields: {sorted(unknown)}")
    try:
        dt = float(cfg["dt_ns"]) * 1e-9
        slices = np.array(cfg["slices_mhz"], dtype=np.float64).reshape(-1, 2) * TWO_PI * 1e6
        theta = float(cfg["target_theta_rad"])
        phi = float(cfg["target_phi_rad"])
    except KeyError as exc:
        raise ValueError(f"missing pulse field: {exc.args[0]}") from exc
    return ShapedPulse(dt=dt, slices=slices, target_theta=theta, target_phi=phi)


def save_pulse(p: ShapedPulse, path) -> None:
    with open(path, "w") as fh:
        json.dump(pulse_to_dict(p), fh, indent=2)
        fh.write("\n")


def load_pulse(path) -> ShapedPulse:
    with open(path) as fh:
        return pulse_from_dict(json.load(fh))
