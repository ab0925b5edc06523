import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rocdd.linalg import (
    SX,
    SY,
    SZ,
    expm_generator,
    frobenius_norm_sq,
    kron,
    kron_all,
    rotation,
    unitary_fidelity,
)


def test_spin_operator_algebra():
    for a, b, c in ((SX, SY, SZ), (SY, SZ, SX), (SZ, SX, SY)):
        assert np.allclose(a @ b - b @ a, 1j * c)
    for op in (SX, SY, SZ):
        assert np.allclose(op @ op, 0.25 * np.eye(2))
        assert np.allclose(op, op.conj().T)


@given(theta=st.floats(-7.0, 7.0), phi=st.floats(-7.0, 7.0))
def test_rotation_matches_exponential(theta, phi):
    h = math.cos(phi) * SX + math.sin(phi) * SY
    want = expm_generator(theta * h, 1.0)
    got = rotation(theta, phi)
    assert np.max(np.abs(got - want)) < 1e-12


def test_rotation_composition():
    assert np.allclose(rotation(math.pi, 0.0) @ rotation(math.pi, 0.0),
                       -np.eye(2))
    r = rotation(math.pi / 2, 0.0) @ rotation(math.pi / 2, 0.0)
    assert np.allclose(r, rotation(math.pi, 0.0))


def test_kron_identity():
    assert np.allclose(kron(np.eye(2), np.eye(2)), np.eye(4))
    assert kron_all(np.eye(2), np.eye(2), np.eye(2)).shape == (8, 8)


def test_unitary_fidelity_bounds(rng):
    for _ in range(10):
        h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = 0.5 * (h + h.conj().T)
        u = expm_generator(h, 1.0)
        assert abs(unitary_fidelity(u, u) - 1.0) < 1e-12
        v = expm_generator(h * 0.5, 1.0)
        f = unitary_fidelity(u, v)
        assert -1e-12 <= f <= 1.0 + 1e-12


def test_unitary_fidelity_dim_mismatch():
    with pytest.raises(ValueError):
        unitary_fidelity(np.eye(2), np.eye(4))


def test_frobenius_norm_sq():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert abs(frobenius_norm_sq(m) - 30.0) < 1e-12


def test_expm_generator_validation():
    with pytest.raises(ValueError):
        expm_generator(np.eye(2), -1.0)
