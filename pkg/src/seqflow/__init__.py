"""Sequence-model toolkit for over-parameterized gradient flows.

Simulates the observation model z_j = theta*_j + noise with trainable
factored estimators theta_j = a_j b_j**D beta_j, evaluates generalization
risk and convergence rates under oracle early stopping, and carries the
same dynamics into trigonometric-basis regression on the torus.
"""

from .signals import (
    EigenSchedule,
    SequenceInstance,
    SignalSpec,
    StructureReport,
    build_eigenvalues,
    build_signal,
    index_map,
    noise_values,
    phi_psi_rate_check,
    sample_instance,
    structure_report,
)
from .flows import (
    EscapeTimeBounds,
    FlowState,
    IntegratorConfig,
    NumericalAbort,
    Schedule,
    Trajectory,
    checkpoint_times,
    eigen_term,
    escape_time_bounds,
    export_trajectories_csv,
    integrate_deep,
    integrate_twolayer,
    make_schedule,
    theta_tilde,
    vanilla_estimate,
)
from .risk import (
    RateFit,
    RiskSummary,
    ideal_risk,
    loglog_rate_fit,
    monte_carlo_risk,
    oracle_stopping_search,
    risk,
    vanilla_risk_closed_form,
)
from .engine import EngineSettings, RiskCurves, build_components, risk_curves
from .torus import (
    FourierDesign,
    TorusDesign,
    eval_basis,
    fit_adaptive_diagonal,
    fit_fixed_kernel_gf,
    fourier_index_order,
    make_fourier_design,
    make_torus_design,
)
from .spectrum import (
    CoefficientSpectrum,
    IngestError,
    TabularDataset,
    empirical_coefficients,
    ingest_csv,
    normalize_to_torus,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    parse_config_file,
    run_compare,
    run_eigtrace,
    run_kernel2d,
    run_table,
)

__version__ = "0.1.0"
