"""Decoherence of state functionals over a bound-plus-continuum spectrum.

Modules
-------
spectral_core
    Spectrum grid, five-block observables and states, the dual pairing.
dynamics
    Time evolution, oscillatory expectation values and the weak limit.
pointer
    Pointer basis of the equilibrium state and the exact pointer observables.
model_deltawell
    Analytic eigenfunctions of the attractive delta well.
wigner_classical
    Wigner transforms, classical-limit residuals, classical equilibrium ensemble.
cli
    Config-driven command line front end (``pointerbasis evolve|pointer|wigner|check``).
"""
from .spectral_core import (
    InvalidStateError,
    ObservableFn,
    QuantumNumbers,
    SpectrumGrid,
    StateFn,
    ValidationReport,
    cobasis_state,
    density_state,
    diagonal_power,
    diagonal_state,
    dual_pairing,
    gaussian_profile,
    hamiltonian_observable,
    identity_observable,
    label_observable,
    make_spectrum_grid,
    poly_exp_profile,
    symmetrize,
    validate_state,
)
from .dynamics import (
    DecayScan,
    decay_scan,
    decoherence_deficit,
    dyadic_suprema,
    equilibrium_state,
    evolve_state,
    expectation,
    hamiltonian_commutator,
    liouvillian_apply,
)
from .pointer import (
    PointerTransform,
    TrackingError,
    commutator_expectation,
    diagonalize_blocks,
    moment_check,
    moment_table,
    pointer_observables,
    transform_observable,
    transform_state,
)
from .model_deltawell import PhysicalModel, deltawell_model, eigenfunction_check, wavepacket_amplitudes
from .wigner_classical import (
    ClassicalEnsemble,
    PhaseSpaceGrid,
    WignerDensity,
    classical_equilibrium_density,
    classical_moments,
    make_phase_space_grid,
    moyal_vs_poisson_residual,
    phase_space_pairing,
    position_kernel,
    product_correspondence_residual,
    wigner_observable,
    wigner_state,
)

__version__ = "0.1.0"
