import math

import numpy as np
import pytest
import scipy.linalg

from rocdd.pulses import phase_shift, pulse_propagator
from rocdd.system import NO_ERROR, coupling_hamiltonian, electron_op
from rocdd.linalg import SX, SY, SZ, frobenius_norm_sq
from rocdd.vanloan import (
    AMPLITUDE,
    BATH,
    DETUNING,
    augmented_generator,
    derivative_norms,
    directional_derivatives,
)

from conftest import random_pulse


def dyson_oracle(p, sys, va_stack, vb_stack, steps_per_slice=160):
    """Midpoint-Riemann integration of the first/second Dyson terms.

    D1(V) = U(T) * (-i) * int U(t)^dag V(t) U(t) dt (toggling frame),
    D2(Va, Vb) = U(T) * (-1) * int_0^T int_0^t Va~(t) Vb~(t') dt' dt.
    """
    d = va_stack.shape[1]
    # Build fine-grained control propagators.
    times = []
    values_a = []
    values_b = []
    hcs = []
    for m, (ux, uy) in enumerate(p.slices):
        hc = ux * (electron_op(sys, SX) if d == sys.dim else SX) + \
             uy * (electron_op(sys, SY) if d == sys.dim else SY)
        for k in range(steps_per_slice):
            times.append(p.dt / steps_per_slice)
            hcs.append(hc)
            values_a.append(va_stack[m])
            values_b.append(vb_stack[m])
    u = np.eye(d, dtype=complex)
    toggled_a = []
    toggled_b = []
    for dt_k, hc, va, vb in zip(times, hcs, values_a, values_b):
        u_mid = scipy.linalg.expm(-1j * hc * dt_k / 2) @ u
        toggled_a.append(u_mid.conj().T @ va @ u_mid * dt_k)
        toggled_b.append(u_mid.conj().T @ vb @ u_mid * dt_k)
        u = scipy.linalg.expm(-1j * hc * dt_k) @ u
    d1 = -1j * u @ np.sum(toggled_a, axis=0)
    acc = np.zeros((d, d), dtype=complex)
    partial_b = np.zeros((d, d), dtype=complex)
    for ta, tb in zip(toggled_a, toggled_b):
        acc += ta @ (partial_b + 0.5 * tb)
        partial_b += tb
    d2 = -u @ acc
    return u, d1, d2


def _stacks(p, sys, tag, space_dim):
    n = p.n_slices
    if tag == DETUNING:
        v = sys.delta_max * (electron_op(sys, SZ) if space_dim == sys.dim
                             else np.array(SZ))
        return np.broadcast_to(v, (n, space_dim, space_dim))
    if tag == AMPLITUDE:
        out = np.empty((n, space_dim, space_dim), dtype=complex)
        hx = electron_op(sys, SX) if space_dim == sys.dim else np.array(SX)
        hy = electron_op(sys, SY) if space_dim == sys.dim else np.array(SY)
        for m, (ux, uy) in enumerate(p.slices):
            out[m] = ux * hx + uy * hy
        return out
    v = coupling_hamiltonian(sys)
    return np.broadcast_to(v, (n, space_dim, space_dim))


def test_augmented_generator_layout(rng):
    hc = rng.standard_normal((2, 2))
    va = rng.standard_normal((2, 2))
    vb = rng.standard_normal((2, 2))
    g = augmented_generator(hc, va, vb)
    assert g.shape == (6, 6)
    assert np.allclose(g[0:2, 0:2], hc)
    assert np.allclose(g[0:2, 2:4], va)
    assert np.allclose(g[2:4, 4:6], vb)
    assert np.allclose(g[2:4, 0:2], 0)


def test_augmented_generator_validation():
    with pytest.raises(ValueError):
        augmented_generator(np.eye(2), np.eye(3), np.eye(2))


def test_block_zero_equals_propagator(electron_system, rng):
    p = random_pulse(rng, 8, electron_system.omega_max)
    ds = directional_derivatives(p, electron_system, [DETUNING])
    u = pulse_propagator(p, electron_system, NO_ERROR, include_bath=False)
    assert np.max(np.abs(ds.u_ideal - u)) < 1e-12


@pytest.mark.parametrize("trial", range(12))
def test_vanloan_matches_dyson_electron(trial, electron_system):
    rng = np.random.default_rng(100 + trial)
    n = int(rng.integers(2, 9))
    p = random_pulse(rng, n, electron_system.omega_max)
    ds = directional_derivatives(p, electron_system, [DETUNING, AMPLITUDE])
    va = _stacks(p, electron_system, DETUNING, 2)
    vb = _stacks(p, electron_system, AMPLITUDE, 2)
    u, d1a, d2 = dyson_oracle(p, electron_system, va, vb)
    rel = np.linalg.norm(ds.d1[DETUNING] - d1a) / np.linalg.norm(d1a)
    assert rel < 1e-6
    rel2 = np.linalg.norm(ds.d2[(DETUNING, AMPLITUDE)] - d2) / max(np.linalg.norm(d2), 1e-30)
    assert rel2 < 1e-5


def test_vanloan_matches_dyson_bath(bounding_system):
    rng = np.random.default_rng(7)
    p = random_pulse(rng, 5, bounding_system.omega_max)
    ds = directional_derivatives(p, bounding_system, [BATH])
    va = _stacks(p, bounding_system, BATH, 4)
    u, d1, d2 = dyson_oracle(p, bounding_system, va, va)
    rel = np.linalg.norm(ds.d1[BATH] - d1) / np.linalg.norm(d1)
    assert rel < 1e-6
    rel2 = np.linalg.norm(ds.d2[(BATH, BATH)] - d2) / np.linalg.norm(d2)
    assert rel2 < 1e-5


@pytest.mark.parametrize("trial", range(20))
def test_phase_covariance_of_norms(trial, electron_system):
    rng = np.random.default_rng(300 + trial)
    p = random_pulse(rng, int(rng.integers(3, 10)), electron_system.omega_max)
    phi = float(rng.uniform(0, 2 * math.pi))
    tags = [DETUNING, AMPLITUDE]
    base = derivative_norms(directional_derivatives(p, electron_system, tags))
    shifted = derivative_norms(
        directional_derivatives(phase_shift(p, phi), electron_system, tags))
    for key in [DETUNING, AMPLITUDE, (DETUNING, DETUNING),
                (AMPLITUDE, AMPLITUDE)]:
        denom = max(abs(base[key]), 1e-30)
        assert abs(base[key] - shifted[key]) / denom < 1e-9


def test_unknown_tag_rejected(electron_system, rng):
    p = random_pulse(rng, 4, electron_system.omega_max)
    with pytest.raises(ValueError):
        directional_derivatives(p, electron_system, ["nonsense"])


def test_bath_requires_nuclei(electron_system, rng):
    p = random_pulse(rng, 4, electron_system.omega_max)
    with pytest.raises(ValueError):
        directional_derivatives(p, electron_system, [BATH])


def test_derivative_norms_keys(bounding_system, rng):
    p = random_pulse(rng, 4, bounding_system.omega_max)
    ds = directional_derivatives(p, bounding_system, [DETUNING, BATH])
    norms = derivative_norms(ds)
    assert DETUNING in norms and BATH in norms
    assert (DETUNING, BATH) in norms and (BATH, DETUNING) in norms
    for v in norms.values():
        assert v >= 0.0
