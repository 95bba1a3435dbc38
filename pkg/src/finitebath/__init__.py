"""Thermalization of a two-level system coupled to a two-band finite bath.

Exact Schroedinger propagation of the full pure state, reduction to the
local 2x2 density matrix, and quantitative comparison against the
statistical rate-equation prediction and the weak-coupling equilibrium.
"""

__version__ = "0.1.0"

from .model import (
    ConditionReport,
    CouplingMatrix,
    FiniteBathModel,
    HomogeneityReport,
    ModelParams,
    build_model,
    check_conditions,
    homogeneity_diagnostic,
)
from .dynamics import (
    BlockDecomposition,
    PureState,
    SpectralPropagator,
    block_decomposition,
    build_propagator,
    evolve,
    evolve_grid,
    evolve_ode,
    full_hamiltonian,
    initial_state_excited,
    initial_state_subspace_random,
    initial_state_superposition,
)
from .observables import (
    ReducedState,
    Trajectory,
    band_kernel,
    coherence,
    coupled_probability,
    entropy,
    excitation_series,
    kernel_recurrence_time,
    purity,
    reduce_state,
    sample_trajectory,
)
from .ham import (
    HamPrediction,
    HamRates,
    NonMarkovianError,
    ba_equilibrium,
    integrate_rate_equation,
    predict_rho01,
    predict_rho11,
    prediction,
    rates,
)
from .metrics import (
    DeviationReport,
    ExponentialFit,
    Histogram,
    ScalingFit,
    best_exponential_fit,
    deviation_d2,
    histogram,
    scaling_fit,
)
from .harness import (
    ConfigError,
    RunConfig,
    ScenarioResult,
    config_from_dict,
    load_config,
    paper_preset,
    run_scenario,
    write_outputs,
)
