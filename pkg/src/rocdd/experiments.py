"""Grid-sweep numerical studies built on the sequence propagators.

Covers nuclear-spin detection spectra, identity-protection robustness
maps, PulsePol polarization-transfer maps and single-pulse robustness
profiles, plus their CSV serializations.
"""

import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .pulses import ShapedPulse, pulse_propagator, target_rotation
from .sequences import (
    PulsePolSpec,
    build_sequence,
    pulsepol_propagator,
    pulsepol_tau,
    sequence_propagator,
)
from .system import ErrorModel, SpinSystem

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SpectrumResult:
    """Transition probability P against interpulse delay tau.

    omega_det = pi / tau is the detection frequency each delay probes.
    """

    taus: np.ndarray
    p: np.ndarray

    @property
    def omega_det(self) -> np.ndarray:
        return np.pi / self.taus


@dataclass(frozen=True)
class RobustnessMap:
    """Fidelity or transfer value on a (detuning, Rabi deviation) grid.

    Axes are stored as dimensionless fractions: detunings of delta_max,
    rabi_devs of the nominal amplitude.  values[i, j] corresponds to
    (detunings[i], rabi_devs[j]).
    """

    detunings: np.ndarray
    rabi_devs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.detunings), len(self.rabi_devs)):
            raise ValueError("values grid does not match the axes")


def _grid_map(fn, points, threads: int):
    if threads <= 1:
        return [fn(pt) for pt in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, points))


def _survival_probability(u: np.ndarray, sys: SpinSystem) -> float:
    """P for rho0 = |+><+| (x) (I/2)^n, readout along the prepared axis."""
    dim_n = 2**sys.n_nuclei
    plus = np.array([1.0, 1.0]) / math.sqrt(2.0)
    # Rows of (<+| (x) I) U split over the two electron blocks.
    bra = plus[0] * u[:dim_n, :] + plus[1] * u[dim_n:, :]
    total = 0.0
    for b in range(dim_n):
        psi0 = np.zeros(2 * dim_n, dtype=np.complex128)
        psi0[b] = plus[0]
        psi0[dim_n + b] = plus[1]
        amp = bra @ psi0
        total += float(np.sum(np.abs(amp) ** 2))
    return total / dim_n


def _electron_reduced(u: np.ndarray, sys: SpinSystem) -> np.ndarray:
    """Partial-trace average of the joint propagator over the nuclear bath."""
    dim_n = 2**sys.n_nuclei
    out = np.empty((2, 2), dtype=np.complex128)
    for i in range(2):
        for j in range(2):
            block = u[i * dim_n:(i + 1) * dim_n, j * dim_n:(j + 1) * dim_n]
            out[i, j] = np.trace(block) / dim_n
    return out


def detection_spectrum(sys: SpinSystem, strategy: str, pulse: ShapedPulse,
                       cycles: int, taus, err: ErrorModel = ErrorModel(),
                       seed: int | None = None, threads: int = 1) -> SpectrumResult:
    """Sweep the interpulse delay and record the |+> survival probability.

    The electron starts on the equator, the bath maximally mixed; dips
    below the P = 1 baseline mark delays resonant with a nuclear spin.
    """
    taus = np.asarray(taus, dtype=np.float64)

    def one(tau):
        seq = build_sequence(strategy, pulse, tau, cycles, seed=seed)
        u = sequence_propagator(seq, sys, err)
        return _survival_probability(u, sys)

    p = np.array(_grid_map(one, taus, threads))
    return SpectrumResult(taus=taus, p=p)


def identity_robustness_map(sys: SpinSystem, strategy: str, pulse: ShapedPulse,
                            cycles: int, tau: float, detunings, rabi_devs,
                            seed: int | None = None,
                            threads: int = 1) -> RobustnessMap:
    """Electron-identity fidelity of a DD sequence across static errors."""
    detunings = np.asarray(detunings, dtype=np.float64)
    rabi_devs = np.asarray(rabi_devs, dtype=np.float64)
    pts = [(e1, e2) for e1 in detunings for e2 in rabi_devs]

    def one(pt):
        seq = build_sequence(strategy, pulse, tau, cycles, seed=seed)
        u = sequence_propagator(seq, sys, ErrorModel(*pt))
        u_red = _electron_reduced(u, sys)
        return abs(np.trace(u_red)) ** 2 / 4.0

    vals = np.array(_grid_map(one, pts, threads)).reshape(len(detunings), len(rabi_devs))
    return RobustnessMap(detunings=detunings, rabi_devs=rabi_devs, values=vals)


def _nuclear_zero_population(u: np.ndarray) -> float:
    """Population of the nuclear |0> state after one PulsePol run.

    rho0 = |0><0|_e (x) I/2; the nuclear reduced state's |0> population is
    1/2 at start and 1 at full transfer.
    """
    if u.shape != (4, 4):
        raise ValueError("PulsePol transfer metric needs a single nucleus")
    pop = 0.0
    for b in range(2):  # mixed nuclear input states
        psi = u[:, b]  # electron |0>, nucleus |b>
        pop += 0.5 * (abs(psi[0]) ** 2 + abs(psi[2]) ** 2)  # nucleus |0> outcomes
    return pop


def ideal_transfer_curve(spec: PulsePolSpec, sys: SpinSystem,
                         n_max: int) -> np.ndarray:
    """Nuclear |0> population vs cycle number under ideal pulses."""
    from .pulses import ideal_pulse

    base = PulsePolSpec(l=spec.l, cycles=1, pi2_pulse=ideal_pulse(math.pi / 2),
                        pi_pulse=ideal_pulse(math.pi))
    cycle = pulsepol_propagator(base, sys, ErrorModel())
    out = np.empty(n_max)
    u = np.eye(4, dtype=np.complex128)
    for n in range(n_max):
        u = cycle @ u
        out[n] = _nuclear_zero_population(u)
    return out


def dnp_transfer_map(spec: PulsePolSpec, sys: SpinSystem, detunings, rabi_devs,
                     threads: int = 1,
                     reference: float | None = None) -> RobustnessMap:
    """PulsePol transfer efficiency across static errors.

    Values are the nuclear polarization gained, calibrated so an
    error-free ideal-pulse run at the same (l, N) scores exactly 1.
    """
    if sys.n_nuclei != 1:
        raise ValueError("the transfer map is defined for a single nucleus")
    detunings = np.asarray(detunings, dtype=np.float64)
    rabi_devs = np.asarray(rabi_devs, dtype=np.float64)
    if reference is None:
        reference = float(ideal_transfer_curve(spec, sys, spec.cycles)[-1])
    gain_ref = reference - 0.5
    if gain_ref <= 1e-6:
        raise ValueError("ideal reference shows no polarization transfer")
    pts = [(e1, e2) for e1 in detunings for e2 in rabi_devs]

    def one(pt):
        u = pulsepol_propagator(spec, sys, ErrorModel(*pt))
        return (_nuclear_zero_population(u) - 0.5) / gain_ref

    vals = np.array(_grid_map(one, pts, threads)).reshape(len(detunings), len(rabi_devs))
    return RobustnessMap(detunings=detunings, rabi_devs=rabi_devs, values=vals)


def pulse_robustness_profile(pulse: ShapedPulse, sys: SpinSystem, detunings,
                             rabi_devs, threads: int = 1) -> RobustnessMap:
    """Gate fidelity of a single pulse to its target rotation across errors."""
    detunings = np.asarray(detunings, dtype=np.float64)
    rabi_devs = np.asarray(rabi_devs, dtype=np.float64)
    target = target_rotation(pulse)
    pts = [(e1, e2) for e1 in detunings for e2 in rabi_devs]

    def one(pt):
        u = pulse_propagator(pulse, sys, ErrorModel(*pt), include_bath=False)
        return abs(np.trace(u @ target.conj().T)) ** 2 / 4.0

    vals = np.array(_grid_map(one, pts, threads)).reshape(len(detunings), len(rabi_devs))
    return RobustnessMap(detunings=detunings, rabi_devs=rabi_devs, values=vals)


def flat_area_fraction(m: RobustnessMap, level: float = 0.99) -> float:
    """Fraction of grid cells with value >= level (robust-region size metric)."""
    return float(np.mean(m.values >= level))


# --- CSV output -------------------------------------------------------------


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def spectrum_csv(res: SpectrumResult) -> str:
    lines = ["tau_ns, omega_det_khz, p"]
    for tau, p in zip(res.taus, res.p):
        omega_khz = (math.pi / tau) / (TWO_PI * 1e3)
        lines.append(f"{_fmt(tau * 1e9)}, {_fmt(omega_khz)}, {_fmt(p)}")
    return "\n".join(lines) + "\n"


def map_csv(m: RobustnessMap, delta_max: float) -> str:
    """Rows in grid order, detuning outer; detuning axis converted to MHz."""
    lines = ["detuning_mhz, rabi_dev_pct, value"]
    for i, e1 in enumerate(m.detunings):
        det_mhz = e1 * delta_max / (TWO_PI * 1e6)
        for j, e2 in enumerate(m.rabi_devs):
            lines.append(f"{_fmt(det_mhz)}, {_fmt(100.0 * e2)}, {_fmt(m.values[i, j])}")
    return "\n".join(lines) + "\n"


def write_spectrum(res: SpectrumResult, path) -> None:
    atomic_write_text(path, spectrum_csv(res))


def write_map(m: RobustnessMap, delta_max: float, path) -> None:
    atomic_write_text(path, map_csv(m, delta_max))
