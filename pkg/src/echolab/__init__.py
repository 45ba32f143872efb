"""Stability of two weakly coupled kicked tops.

The package runs paired unperturbed/coupled evolutions of a bipartite spin
system and records three stability measures per kick: the fidelity of the
composite state, the reduced fidelity seen by one subsystem, and the purity
of the coupled reduced density matrix.  A linear-response layer computes the
two-time correlation sums that control all three decays, fits transport and
plateau coefficients, evaluates closed forms for solvable rotations, and
predicts the decay curves in the four dynamical regimes (mixing, regular,
fast mixing environment, fast regular environment).
"""

from .spin import (
    SpinOperators,
    TopParams,
    CoherentSpec,
    angular_momentum_matrices,
    coherent_state,
    top_propagator,
    heisenberg_correlations,
    m_values,
)
from .bipartite import (
    CompositeState,
    ReducedDensity,
    product_state,
    apply_separable,
    apply_diagonal_coupling,
    apply_product_coupling,
    partial_trace_env,
    partial_trace_sys,
    purity,
    reduced_purity,
    overlap,
)
from .echo import (
    Perturbation,
    CoupledConfig,
    StabilitySeries,
    SaturationEstimate,
    evolve_pair,
    echo_state,
    saturation_estimate,
)
from .response import (
    Regime,
    CorrelationLedger,
    DecayCoefficients,
    FitResult,
    IntegrationError,
    TimescaleReport,
    correlation_sums,
    fit_sigma,
    fit_sigma_sys,
    fit_sigma_env,
    fit_cbar,
    closed_form_regular,
    closed_form_fast_mixing,
    closed_form_fast_regular,
    predict_series,
    predicted_tau,
    master_equation_evolve,
    master_equation_steps,
    heisenberg_operator_series,
    heisenberg_operator_iter,
    classify_timescales,
)
from .presets import RegimePreset, PRESETS, build_preset_config
from .driver import (
    TauRecord,
    RunResult,
    run_preset,
    run_config,
    rerun_from_manifest,
    extract_tau,
    delta_scan,
    collapse_scan,
)
from ._version import __version__
