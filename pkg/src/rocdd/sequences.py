"""DD phase strategies and full-sequence propagators.

Implements the XY8 / UR-n / random-phase / BB1-composite / Gaussian-
amplitude families plus the PulsePol polarization-transfer sequence.
The interpulse delay tau counts the free evolution plus half the pulse
width: every pulse is flanked by free evolutions of (tau - width/2)/2, so
the pulse-center period is tau + width/2.  During a resonant pi pulse the
electron-conditional part of the hyperfine coupling averages out, which
moves the detection resonance of a finite-width sequence to
tau = k pi / omega_tilde - width/2.  Free evolution carries the bath
coupling and the static detuning error.
"""

import math
from dataclasses import dataclass

import numpy as np

from .pulses import ShapedPulse, phase_shift, pulse_propagator, scale_amplitude
from .system import ErrorModel, SpinSystem, effective_larmor, free_propagator

TWO_PI = 2.0 * math.pi

STRATEGIES = ("xy8", "ur8", "rp-xy8", "bb1-xy8", "gaxy8")


@dataclass(frozen=True)
class DDSequence:
    """Expanded sequence: per-cycle (pulse, phase) entries plus timing.

    Identical cycles share the same tuple object, which the propagator
    uses to take a matrix power instead of multiplying cycle by cycle.
    """

    cycles: tuple
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "cycles", tuple(self.cycles))
        if len(self.cycles) < 1:
            raise ValueError("sequence needs at least one cycle")
        for cycle in self.cycles:
            for pulse, _ in cycle:
                if pulse.duration > self.tau:
                    raise ValueError("pulse width exceeds the interpulse delay")

    @property
    def n_cycles(self) -> int:
        return len(self.cycles)


def xy8_phases() -> np.ndarray:
    """XYXYYXYX phase pattern."""
    q = math.pi / 2
    return np.array([0.0, q, 0.0, q, q, 0.0, q, 0.0])


def ur_phases(n: int, phi2: float = math.pi / 2, sign: int = +1) -> np.ndarray:
    """Universally robust phases phi_k = (k-1)(k-2)/2 Phi + (k-1) phi2.

    Phi = sign*pi/m for n = 4m and sign*2m*pi/(2m+1) for n = 4m+2.  The
    defaults reproduce the published UR8 list {0, pi/2, 3pi/2, pi, pi,
    3pi/2, pi/2, 0}.
    """
    if n < 4 or n % 2 != 0:
        raise ValueError("UR sequences need even n >= 4")
    if n % 4 == 0:
        big_phi = sign * math.pi / (n // 4)
    else:
        m = (n - 2) // 4
        big_phi = sign * (2 * m * math.pi) / (2 * m + 1)
    k = np.arange(1, n + 1)
    return np.mod((k - 1) * (k - 2) / 2 * big_phi + (k - 1) * phi2, TWO_PI)


def rp_phases(base: np.ndarray, cycles: int, seed: int) -> list:
    """Per-cycle copies of ``base`` shifted by a random global phase."""
    rng = np.random.default_rng(seed)
    offsets = rng.uniform(0.0, TWO_PI, size=cycles)
    return [np.mod(np.asarray(base) + off, TWO_PI) for off in offsets]


def gaussian_amplitudes(cycles: int, tau: float, lambda0: float = 0.271,
                        sigma: float | None = None) -> np.ndarray:
    """Per-cycle amplitude scale factors lambda(t) = l0 exp(-t^2/(2 s^2)).

    t runs over cycle centers measured from the sequence midpoint; the
    window is T = 4 L tau with sigma defaulting to T/(4 sqrt(2)).
    """
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    T = 4.0 * cycles * tau
    if sigma is None:
        sigma = T / (4.0 * math.sqrt(2.0))
    centers = ((np.arange(cycles) + 0.5) / cycles - 0.5) * T
    return lambda0 * np.exp(-(centers**2) / (2.0 * sigma**2))


def resonance_delay(omega_i: float, k: int, effective_width: float = 0.0) -> float:
    """Resonant interpulse delay tau' = k pi / omega_i - width/2 (k odd)."""
    if k < 1 or k % 2 == 0:
        raise ValueError("resonance order k must be a positive odd integer")
    tau = k * math.pi / omega_i - effective_width / 2.0
    if tau <= 0:
        raise ValueError("resonant delay is non-positive for these parameters")
    return tau


def build_sequence(strategy: str, base_pulse: ShapedPulse, tau: float,
                   cycles: int, seed: int | None = None,
                   gaxy8_lambda0: float = 0.271) -> DDSequence:
    """Expand a named strategy into a flat DDSequence of pi pulses.

    For 'bb1-xy8' the caller passes the BB1-expanded pi pulse as
    ``base_pulse`` (see pulses.composite_to_pulse); its composite phases
    ride along with the per-entry XY8 phase shift.
    """
    if abs(base_pulse.target_theta - math.pi) > 1e-9:
        raise ValueError("DD strategies expect a pi base pulse")
    if strategy in ("xy8", "bb1-xy8"):
        cycle = tuple((base_pulse, phi) for phi in xy8_phases())
        return DDSequence(cycles=(cycle,) * cycles, tau=tau)
    if strategy == "ur8" or (strategy.startswith("ur") and strategy[2:].isdigit()):
        n = 8 if strategy == "ur8" else int(strategy[2:])
        cycle = tuple((base_pulse, phi) for phi in ur_phases(n))
        return DDSequence(cycles=(cycle,) * cycles, tau=tau)
    if strategy == "rp-xy8":
        if seed is None:
            raise ValueError("rp-xy8 needs a seed")
        per_cycle = rp_phases(xy8_phases(), cycles, seed)
        cyc = tuple(
            tuple((base_pulse, phi) for phi in phases) for phases in per_cycle
        )
        return DDSequence(cycles=cyc, tau=tau)
    if strategy == "gaxy8":
        scales = gaussian_amplitudes(cycles, tau, lambda0=gaxy8_lambda0)
        cyc = tuple(
            tuple((scale_amplitude(base_pulse, s), phi) for phi in xy8_phases())
            for s in scales
        )
        return DDSequence(cycles=cyc, tau=tau)
    raise ValueError(f"unknown strategy: {strategy!r}")


def _cycle_propagator(cycle, tau: float, sys: SpinSystem, err: ErrorModel):
    u = np.eye(sys.dim, dtype=np.complex128)
    for pulse, phase in cycle:
        w = free_propagator(sys, err, (tau - pulse.duration / 2.0) / 2.0)
        up = pulse_propagator(phase_shift(pulse, phase), sys, err, include_bath=True)
        u = w @ up @ w @ u
    return u


def sequence_propagator(seq: DDSequence, sys: SpinSystem,
                        err: ErrorModel = ErrorModel()) -> np.ndarray:
    """Joint-space unitary of the full N-cycle sequence.

    Identical cycles (shared tuple objects) are propagated once and
    matrix-powered; distinct cycles multiply in time order.
    """
    cache: dict = {}
    runs = []  # (cycle_id, count) in time order
    for cycle in seq.cycles:
        cid = id(cycle)
        if cid not in cache:
            cache[cid] = _cycle_propagator(cycle, seq.tau, sys, err)
        if runs and runs[-1][0] == cid:
            runs[-1][1] += 1
        else:
            runs.append([cid, 1])
    u = np.eye(sys.dim, dtype=np.complex128)
    for cid, count in runs:
        block = cache[cid] if count == 1 else np.linalg.matrix_power(cache[cid], count)
        u = block @ u
    return u


# --- PulsePol ---------------------------------------------------------------


@dataclass(frozen=True)
class PulsePolSpec:
    """PulsePol at resonance order l for N cycles of duration tau each.

    One cycle is (pi/2)_y - free - (pi)_x - free - (pi/2)_y followed by
    the same block with every phase advanced by pi/2, with four equal free
    slots chosen so the cycle lasts exactly tau = l pi / omega_I.  The
    polarization-transfer resonance sits at l = 1, 5, 9, ...; l = 5 is
    the standard operating point.
    """

    l: int
    cycles: int
    pi2_pulse: ShapedPulse
    pi_pulse: ShapedPulse

    def __post_init__(self):
        if self.l < 1 or self.l % 2 == 0:
            raise ValueError("resonance order l must be odd")
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")


def pulsepol_tau(spec: PulsePolSpec, sys: SpinSystem) -> float:
    """Cycle duration tau = l pi / omega_I for the first nucleus."""
    if sys.n_nuclei == 0:
        raise ValueError("PulsePol needs a nuclear spin")
    return spec.l * math.pi / effective_larmor(sys, 0)


def pulsepol_propagator(spec: PulsePolSpec, sys: SpinSystem,
                        err: ErrorModel = ErrorModel()) -> np.ndarray:
    """Joint unitary of N PulsePol cycles (total time N tau)."""
    tau = pulsepol_tau(spec, sys)
    t_q = spec.pi2_pulse.duration
    t_p = spec.pi_pulse.duration
    tau_free = tau - 4 * t_q - 2 * t_p
    if tau_free < 0:
        raise ValueError("pulses too long for the PulsePol delay")
    w = free_propagator(sys, err, tau_free / 4.0)

    def prop(pulse, phi):
        return pulse_propagator(phase_shift(pulse, phi), sys, err, include_bath=True)

    def half(base):
        return (prop(spec.pi2_pulse, base + math.pi / 2) @ w
                @ prop(spec.pi_pulse, base) @ w
                @ prop(spec.pi2_pulse, base + math.pi / 2))

    # Second half leads the first by a quarter phase; with this package's
    # rotation sign convention that is what realizes the l = 1 mod 4
    # flip-flop resonances.
    cycle = half(math.pi / 2) @ half(0.0)
    return np.linalg.matrix_power(cycle, spec.cycles)
