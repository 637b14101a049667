"""Surrogate-accelerated Bayesian calibration of a toy land surface model."""

__version__ = "0.1.0"

from .params import (
    MULTIPLIER_MAX,
    MULTIPLIER_MIN,
    N_PARAMS,
    PARAM_NAMES,
    TRUTH_THETA,
    ParamRanges,
    PhysicalParams,
    denormalize,
    normalize,
    prior_sample,
    validate_theta,
)
from .soil import SoilParams, effective_saturation, vg_conductivity, vg_suction
from .vegetation import VegParams, water_stress
from .forcing import ForcingRecord, ForcingSeries, generate_forcing
from .model import (
    ModelState,
    SoilFluxes,
    Trajectory,
    initial_state,
    simulate,
    step_soil,
    step_vegetation,
)
from .presets import ScenarioPreset, load_preset, load_preset_file, save_preset
from .rtm import (
    ChannelParams,
    ObservationSeries,
    brightness_temperature,
    default_observation_times,
    observe,
)
from .ensemble import (
    CostConfig,
    EnsembleDataset,
    cost,
    lhs_sample,
    load_dataset,
    rmse,
    run_ensemble,
    save_dataset,
)
from .surrogate import (
    GpHyper,
    GpSurrogate,
    build_surrogate,
    fit,
    load_surrogate,
    log_marginal_likelihood,
    matern_kernel,
    predict_cost,
    predict_norm_rmse,
    save_surrogate,
)
from .mcmc import Chain, McmcConfig, chain_stats, load_chain, metropolis_hastings, propose, save_chain
from .diagnostics import (
    Histogram,
    bias_ens,
    improvement_rate,
    kld,
    pairwise_correlation,
    r_squared,
    sensitivity_index,
    ubrmse_ens,
)
from .config import RunConfig, parse_config
