"""Robust optimal control pulses and dynamical-decoupling simulation."""

__version__ = "0.1.0"

from .system import (  # noqa: F401
    ErrorModel,
    NuclearSpin,
    SpinSystem,
    default_system,
    system_from_dict,
    system_from_file,
)
from .pulses import (  # noqa: F401
    CompositeSpec,
    ShapedPulse,
    bb1,
    composite_to_pulse,
    corpse,
    ideal_pulse,
    load_pulse,
    pulse_propagator,
    save_pulse,
    square_pulse,
)
from .vanloan import (  # noqa: F401
    AMPLITUDE,
    BATH,
    DETUNING,
    DerivativeSet,
    directional_derivatives,
    derivative_norms,
)
from .optimizer import (  # noqa: F401
    DeConfig,
    FitnessTerm,
    FitnessWeights,
    GrapeConfig,
    OptimizationResult,
    de_optimize,
    default_phi_weights,
    default_psi_weights,
    fitness_phi,
    fitness_psi,
    grape_optimize,
)
from .sequences import (  # noqa: F401
    DDSequence,
    PulsePolSpec,
    build_sequence,
    pulsepol_propagator,
    resonance_delay,
    sequence_propagator,
)
from .experiments import (  # noqa: F401
    RobustnessMap,
    SpectrumResult,
    detection_spectrum,
    dnp_transfer_map,
    identity_robustness_map,
    pulse_robustness_profile,
)
