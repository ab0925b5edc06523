"""First- and second-order directional derivatives of controlled propagators.

The augmented block generator

    [ H_C  V_a  0   ]
    [ 0    H_C  V_b ]
    [ 0    0    H_C ]

is exponentiated slice by slice; the off-diagonal blocks of the resulting
time-ordered product are the Dyson-series coefficients: (0,1) and (1,2)
give first-order derivatives of V_a and V_b, (0,2) the second-order
derivative for the ordered pair (V_a, V_b).
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .linalg import SX, SY, SZ, frobenius_norm_sq
from .pulses import ShapedPulse
from .system import SpinSystem, coupling_hamiltonian, electron_op

DETUNING = "detuning"
AMPLITUDE = "amplitude"
BATH = "bath"
KNOWN_GENERATORS = (DETUNING, AMPLITUDE, BATH)


@dataclass(frozen=True)
class DerivativeSet:
    """Ideal propagator plus first/second-order directional derivatives.

    d1 maps a generator tag to D^(1); d2 maps an ordered tag pair to D^(2).
    """

    u_ideal: np.ndarray
    d1: dict = field(default_factory=dict)
    d2: dict = field(default_factory=dict)


def augmented_generator(hc, va, vb) -> np.ndarray:
    """3d x 3d upper block-triangular Van Loan generator."""
    hc = np.asarray(hc, dtype=np.complex128)
    va = np.asarray(va, dtype=np.complex128)
    vb = np.asarray(vb, dtype=np.complex128)
    d = hc.shape[0]
    if hc.shape != (d, d) or va.shape != (d, d) or vb.shape != (d, d):
        raise ValueError("augmented_generator blocks must be square and equal-dim")
    out = np.zeros((3 * d, 3 * d), dtype=np.complex128)
    for k in range(3):
        out[k * d:(k + 1) * d, k * d:(k + 1) * d] = hc
    out[0:d, d:2 * d] = va
    out[d:2 * d, 2 * d:3 * d] = vb
    return out


def _generator_stack(tag: str, p: ShapedPulse, sys: SpinSystem, space: SpinSystem):
    """Per-slice values of the tagged noise generator on the given space."""
    d = space.dim
    n = p.n_slices
    if tag == DETUNING:
        v = sys.delta_max * electron_op(space, SZ)
        return np.broadcast_to(v, (n, d, d))
    if tag == AMPLITUDE:
        hx = electron_op(space, SX)
        hy = electron_op(space, SY)
        out = np.empty((n, d, d), dtype=np.complex128)
        for m, (ux, uy) in enumerate(p.slices):
            out[m] = ux * hx + uy * hy
        return out
    if tag == BATH:
        if space.n_nuclei == 0:
            raise ValueError("bath generator requires a system with nuclei")
        v = coupling_hamiltonian(space)
        return np.broadcast_to(v, (n, d, d))
    raise ValueError(f"unknown generator tag: {tag!r}")


def _control_stack(p: ShapedPulse, space: SpinSystem):
    d = space.dim
    hx = electron_op(space, SX)
    hy = electron_op(space, SY)
    out = np.empty((p.n_slices, d, d), dtype=np.complex128)
    for m, (ux, uy) in enumerate(p.slices):
        out[m] = ux * hx + uy * hy
    return out


def directional_derivatives(p: ShapedPulse, sys: SpinSystem, generators,
                            pairs=None) -> DerivativeSet:
    """Compute D^(1) for each tag and D^(2) for each ordered pair.

    ``generators`` draws from {'detuning', 'amplitude', 'bath'};
    ``pairs`` defaults to all ordered pairs of the given tags.  When the
    bath generator is involved everything is computed on the joint space,
    otherwise on the bare electron space.
    """
    generators = list(generators)
    for tag in generators:
        if tag not in KNOWN_GENERATORS:
            raise ValueError(f"unknown generator tag: {tag!r}")
    if pairs is None:
        pairs = [(a, b) for a in generators for b in generators]
    space = sys if BATH in generators else sys.without_nuclei()
    d = space.dim

    hc = _control_stack(p, space)
    vstacks = {tag: _generator_stack(tag, p, sys, space) for tag in generators}

    u_ideal = None
    d1: dict = {}
    d2: dict = {}
    for a, b in pairs:
        gens = np.zeros((p.n_slices, 3 * d, 3 * d), dtype=np.complex128)
        gens[:, 0:d, 0:d] = hc
        gens[:, d:2 * d, d:2 * d] = hc
        gens[:, 2 * d:3 * d, 2 * d:3 * d] = hc
        gens[:, 0:d, d:2 * d] = vstacks[a]
        gens[:, d:2 * d, 2 * d:3 * d] = vstacks[b]
        big = kernels.chain_propagator(gens, p.dt)
        u_ideal = big[0:d, 0:d]
        d1.setdefault(a, big[0:d, d:2 * d])
        d1.setdefault(b, big[d:2 * d, 2 * d:3 * d])
        d2[(a, b)] = big[0:d, 2 * d:3 * d]
    if u_ideal is None:
        # No pairs requested: still report the ideal propagator.
        u_ideal = kernels.chain_propagator(hc, p.dt)
    return DerivativeSet(u_ideal=u_ideal, d1=d1, d2=d2)


def derivative_norms(ds: DerivativeSet) -> dict:
    """Squared Frobenius norm of every stored derivative, keyed by tag/pair."""
    norms = {tag: frobenius_norm_sq(m) for tag, m in ds.d1.items()}
    norms.update({pair: frobenius_norm_sq(m) for pair, m in ds.d2.items()})
    return norms
