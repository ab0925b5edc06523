import math

import numpy as np
import pytest

from rocdd.system import NuclearSpin, default_system

TWO_PI = 2.0 * math.pi


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def electron_system():
    return default_system()


@pytest.fixture
def bounding_system():
    # Single worst-case bath spin: couplings at 10% of the nuclear Larmor.
    omega_i = TWO_PI * 1.071e3 * 400.0
    return default_system([NuclearSpin(0.1 * omega_i, 0.1 * omega_i)],
                          b_field_gauss=400.0)


@pytest.fixture
def two_spin_system():
    return default_system(
        [NuclearSpin(TWO_PI * 10e3, TWO_PI * 20e3),
         NuclearSpin(-TWO_PI * 5e3, TWO_PI * 8e3)],
        b_field_gauss=401.0,
    )


def random_pulse(rng, n_slices, omega_max, dt=2e-9, theta=math.pi):
    slices = rng.uniform(-0.4, 0.4, size=(n_slices, 2)) * omega_max
    from rocdd.pulses import ShapedPulse

    return ShapedPulse(dt=dt, slices=slices, target_theta=theta)
