import math

import numpy as np
import pytest

from rocdd.linalg import unitary_fidelity
from rocdd.pulses import (
    bb1,
    composite_to_pulse,
    corpse,
    ideal_pulse,
    load_pulse,
    phase_shift,
    pulse_from_dict,
    pulse_propagator,
    pulse_to_dict,
    save_pulse,
    scale_amplitude,
    square_pulse,
    target_rotation,
)
from rocdd.system import ErrorModel, NO_ERROR

from conftest import random_pulse


def test_ideal_pulse_propagates_to_rotation(electron_system):
    p = ideal_pulse(math.pi / 2, 0.3)
    u = pulse_propagator(p, electron_system)
    assert np.allclose(u, target_rotation(p))
    assert p.is_ideal and p.duration == 0.0


def test_square_pulse_exact_angle(electron_system):
    p = square_pulse(math.pi, 0.0, electron_system.omega_max, 2e-9)
    u = pulse_propagator(p, electron_system)
    assert unitary_fidelity(u, target_rotation(p)) > 1.0 - 1e-12
    assert p.max_amplitude() <= electron_system.omega_max * (1 + 1e-12)


def test_square_pulse_rounding(electron_system):
    # pi at full drive is 20 ns; with 3 ns slices it must stretch to 21 ns.
    p = square_pulse(math.pi, 0.0, electron_system.omega_max, 3e-9)
    assert p.n_slices == 7
    u = pulse_propagator(p, electron_system)
    assert unitary_fidelity(u, target_rotation(p)) > 1.0 - 1e-12


def test_square_pulse_validation(electron_system):
    with pytest.raises(ValueError):
        square_pulse(0.0, 0.0, electron_system.omega_max, 2e-9)
    with pytest.raises(ValueError):
        square_pulse(math.pi, 0.0, electron_system.omega_max, 100e-9)


def test_corpse_segments():
    spec = corpse(math.pi)
    angles = [theta for theta, _ in spec.segments]
    assert np.allclose(angles, [math.pi / 3, 5 * math.pi / 3, 7 * math.pi / 3])


def test_bb1_phase():
    spec = bb1(math.pi)
    _, phi = spec.segments[0]
    assert abs(phi - math.acos(-0.25)) < 1e-12


@pytest.mark.parametrize("family", [corpse, bb1])
@pytest.mark.parametrize("theta", [math.pi, math.pi / 2])
def test_composite_ideal_fidelity(family, theta, electron_system):
    p = composite_to_pulse(family(theta), electron_system.omega_max, 1e-9, theta)
    u = pulse_propagator(p, electron_system)
    assert unitary_fidelity(u, target_rotation(p)) >= 1.0 - 1e-9


def test_corpse_first_order_detuning(electron_system):
    theta = math.pi
    plain = square_pulse(theta, 0.0, electron_system.omega_max, 1e-9)
    comp = composite_to_pulse(corpse(theta), electron_system.omega_max, 1e-9, theta)
    err = ErrorModel(0.02, 0.0)
    f_plain = unitary_fidelity(pulse_propagator(plain, electron_system, err),
                               target_rotation(plain))
    f_comp = unitary_fidelity(pulse_propagator(comp, electron_system, err),
                              target_rotation(comp))
    assert f_comp > f_plain


def test_bb1_first_order_amplitude(electron_system):
    theta = math.pi
    plain = square_pulse(theta, 0.0, electron_system.omega_max, 1e-9)
    comp = composite_to_pulse(bb1(theta), electron_system.omega_max, 1e-9, theta)
    err = ErrorModel(0.0, 0.05)
    f_plain = unitary_fidelity(pulse_propagator(plain, electron_system, err),
                               target_rotation(plain))
    f_comp = unitary_fidelity(pulse_propagator(comp, electron_system, err),
                              target_rotation(comp))
    assert f_comp > f_plain


def test_phase_shift_conjugates_propagator(electron_system, rng):
    from rocdd.linalg import SZ
    from rocdd.system import electron_op

    p = random_pulse(rng, 12, electron_system.omega_max)
    phi = 0.77
    u = pulse_propagator(p, electron_system)
    u_shifted = pulse_propagator(phase_shift(p, phi), electron_system)
    rz = np.diag(np.exp(-1j * phi * np.diag(electron_op(electron_system, SZ))))
    assert np.max(np.abs(u_shifted - rz @ u @ rz.conj().T)) < 1e-10


def test_scale_amplitude(electron_system, rng):
    p = random_pulse(rng, 6, electron_system.omega_max)
    q = scale_amplitude(p, 0.5)
    assert np.allclose(q.slices, 0.5 * p.slices)


def test_pulse_roundtrip(tmp_path, electron_system, rng):
    p = random_pulse(rng, 10, electron_system.omega_max)
    path = tmp_path / "pulse.json"
    save_pulse(p, path)
    q = load_pulse(path)
    assert np.max(np.abs(q.slices - p.slices)) < 1e-3  # rad/s after MHz round-trip
    assert q.dt == p.dt
    assert q.target_theta == p.target_theta


def test_pulse_from_dict_rejects_unknown():
    d = pulse_to_dict(ideal_pulse(math.pi))
    d["extra"] = 1
    with pytest.raises(ValueError, match="unknown"):
        pulse_from_dict(d)


def test_joint_propagation_includes_bath(bounding_system):
    p = square_pulse(math.pi, 0.0, bounding_system.omega_max, 2e-9)
    u = pulse_propagator(p, bounding_system, NO_ERROR, include_bath=True)
    assert u.shape == (4, 4)
    assert np.linalg.norm(u.conj().T @ u - np.eye(4)) < 1e-10
