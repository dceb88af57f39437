"""Post-shock forecasting from a pool of previously shocked donor series.

A target series is about to experience a shock whose size is unknown.  Each
donor series experienced a comparable shock in the past.  The package fits
an autoregressive model with a shock dummy to every donor, aggregates the
donor shock estimates (plain, inverse-variance and covariate-matched
averages), bootstraps the aggregates, and decides whether adding the
estimated shock to the target's forecast is expected to reduce risk.
"""

from .bootstrap import (
    Assessment,
    BootstrapConfig,
    BootstrapDistribution,
    RiskAssessment,
    assess_all,
    bootstrap,
    delta_hat,
    estimate_all,
)
from .errors import (
    BootstrapFailure,
    DegenerateResidualsError,
    DegenerateVarianceError,
    InputError,
    NumericalError,
    PanelParseError,
    PostShockError,
    SingularDesignError,
    StandardizationError,
)
from .estimators import (
    METHODS,
    DonorShock,
    ShockEstimate,
    WeightVector,
    alpha_adj,
    alpha_ivw,
    alpha_wadj,
    compose_additive,
    donor_shock,
    solve_weights,
)
from .io import load_panel, write_panel
from .loocv import LoocvConfig, LoocvReport, loocv
from .panel import (
    DonorPool,
    FitResult,
    TimeSeries,
    build_design,
    fit_donor,
    fit_ols,
    fit_target,
    forecast_one,
)
from .simulate import SimConfig, SimRow, run_monte_carlo, simulate_pool

__version__ = "0.1.0"
