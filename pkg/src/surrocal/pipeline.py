"""Experiment orchestration: the synthetic-twin pipeline and its stages.

Each stage is independently runnable with file-based handoff (dataset
CSV -> surrogate file -> chain CSV -> diagnostics CSVs), and the twin
command simply runs the stages in order. Every artifact is a pure
function of (config, seed); the one exception is timing.csv, which holds
wall-clock measurements and is documented as non-deterministic.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .diagnostics import (
    bias_ens,
    ensemble_size_study,
    improvement_rate,
    pairwise_correlation,
    sensitivity_index,
    ubrmse_ens,
)
from .ensemble import (
    CostConfig,
    lhs_sample,
    load_dataset,
    rmse,
    run_ensemble,
    save_dataset,
)
from .errors import StageError
from .forcing import HOURS_PER_YEAR, generate_forcing
from .mcmc import Chain, McmcConfig, chain_stats, load_chain, metropolis_hastings, save_chain
from .model import simulate
from .params import N_PARAMS, ParamRanges, TRUTH_THETA, denormalize, prior_sample
from .presets import load_preset, load_preset_file
from .rtm import default_observation_times, observe
from .surrogate import (
    fit,
    load_surrogate,
    predict_cost,
    predict_norm_rmse_var,
    save_surrogate,
)

ARTIFACTS = {
    "forcing": "forcing.csv",
    "observations": "observations.csv",
    "dataset": "dataset.csv",
    "surrogate": "surrogate.txt",
    "chain": "chain.csv",
    "histograms": "histograms.csv",
    "sensitivity": "sensitivity.csv",
    "correlation": "correlation.csv",
    "scores": "scores.csv",
    "study": "study_kld.csv",
    "summary": "summary.txt",
    "timing": "timing.csv",
}

# timing.csv is the only artifact allowed to differ between identical runs
NONDETERMINISTIC_ARTIFACTS = ("timing.csv",)

TRAIN_YEARS_SPLIT = 3

# spawn keys for per-purpose random streams derived from the master seed
_SEED_KEYS = {
    "forcing": 0,
    "obs_noise": 1,
    "lhs": 2,
    "fit": 3,
    "mcmc": 4,
    "eval": 5,
    "validation": 6,
    "study": 7,
}


def stage_seed(master: int, purpose: str) -> int:
    """Deterministic 63-bit child seed for a named purpose."""
    ss = np.random.SeedSequence(master, spawn_key=(_SEED_KEYS[purpose],))
    return int(ss.generate_state(1, np.uint64)[0] >> 1)


@dataclass
class TwinSetup:
    """Deterministic twin-experiment inputs shared by several stages."""

    preset: object
    ranges: ParamRanges
    forcing: object
    truth: object  # truth trajectory
    obs: object  # full-period observations
    obs_train: object  # calibration window (equals obs unless split)


def _load_scenario(cfg: RunConfig):
    if cfg.preset_path:
        return load_preset_file(cfg.preset_path)
    return load_preset(cfg.scenario)


def _ranges_for(cfg: RunConfig, preset) -> ParamRanges:
    return ParamRanges(
        ks_def=preset.ks_def,
        n_def=preset.n_def,
        vmax0_def=preset.vmax0_def,
        es_def=preset.es_def,
        theta_min=cfg.theta_min.copy(),
        theta_max=cfg.theta_max.copy(),
    )


def build_twin_setup(cfg: RunConfig) -> TwinSetup:
    preset = _load_scenario(cfg)
    ranges = _ranges_for(cfg, preset)
    forcing = generate_forcing(preset, cfg.years, seed=stage_seed(cfg.seed, "forcing"))
    truth_params = denormalize(np.array(TRUTH_THETA), ranges)
    truth = simulate(truth_params, forcing, preset, spinup_cycles=cfg.spinup_cycles)
    times = default_observation_times(forcing.n_hours)
    rng = np.random.default_rng(stage_seed(cfg.seed, "obs_noise"))
    obs = observe(truth, times, preset.channels, noise_sd=cfg.obs_noise_sd, rng=rng)
    obs_train = obs
    if cfg.split:
        cut = TRAIN_YEARS_SPLIT * HOURS_PER_YEAR
        keep = obs.times_h < cut
        obs_train = observe(
            truth, obs.times_h[keep], preset.channels, noise_sd=0.0
        )
        if cfg.obs_noise_sd > 0.0:
            # keep the noisy values of the full series rather than redrawing
            obs_train.tb = obs.tb[keep]
    return TwinSetup(
        preset=preset, ranges=ranges, forcing=forcing, truth=truth, obs=obs, obs_train=obs_train
    )


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def stage_ensemble(cfg: RunConfig, setup: TwinSetup | None = None, export_forcing: bool = False):
    """Design the ensemble, run it, and persist observations + dataset."""
    try:
        setup = setup or build_twin_setup(cfg)
        out = _outdir(cfg)
        lhs_seed = stage_seed(cfg.seed, "lhs")
        thetas = lhs_sample(cfg.members, N_PARAMS, seed=lhs_seed)
        dataset = run_ensemble(
            thetas,
            setup.preset,
            setup.obs_train,
            setup.forcing,
            workers=cfg.workers,
            spinup_cycles=cfg.spinup_cycles,
            master_seed=lhs_seed,
            ranges=setup.ranges,
        )
        setup.obs.to_csv(out / ARTIFACTS["observations"])
        save_dataset(dataset, out / ARTIFACTS["dataset"])
        if export_forcing:
            setup.forcing.to_csv(out / ARTIFACTS["forcing"])
        return dataset
    except StageError:
        raise
    except Exception as exc:
        raise StageError("ensemble", exc) from exc


def stage_fit(cfg: RunConfig):
    """Fit the surrogate on the persisted dataset."""
    try:
        out = _outdir(cfg)
        dataset = load_dataset(out / ARTIFACTS["dataset"])
        model = fit(dataset, seed=stage_seed(cfg.seed, "fit"))
        save_surrogate(model, out / ARTIFACTS["surrogate"])
        return model
    except StageError:
        raise
    except Exception as exc:
        raise StageError("fit", exc) from exc


def stage_sample(cfg: RunConfig):
    """Sample the posterior chain over the persisted surrogate."""
    try:
        out = _outdir(cfg)
        model = load_surrogate(out / ARTIFACTS["surrogate"])
        cost_cfg = CostConfig(sigma_o=cfg.sigma_o)
        mcmc_cfg = McmcConfig(
            iterations=cfg.iterations,
            proposal_sd=cfg.proposal_sd,
            seed=stage_seed(cfg.seed, "mcmc"),
        )
        chain = metropolis_hastings(
            lambda th: predict_cost(model, th, cost_cfg),
            mcmc_cfg,
            costfn_id=f"surrogate:{cfg.scenario}",
        )
        save_chain(chain, out / ARTIFACTS["chain"])
        return chain
    except StageError:
        raise
    except Exception as exc:
        raise StageError("sample", exc) from exc


def stage_diagnose(cfg: RunConfig, study_sizes: tuple = (), setup: TwinSetup | None = None):
    """Histograms, sensitivity indices, correlations; optional size study."""
    try:
        out = _outdir(cfg)
        chain = load_chain(out / ARTIFACTS["chain"])
        stats = chain_stats(chain, bins=20)

        with open(out / ARTIFACTS["histograms"], "w", newline="\n") as fh:
            fh.write("param,bin_lo,bin_hi,mass\n")
            for p in range(N_PARAMS):
                for b in range(stats.n_bins):
                    fh.write(
                        "theta%d,%.17g,%.17g,%.17g\n"
                        % (p + 1, stats.bin_edges[b], stats.bin_edges[b + 1], stats.masses[p, b])
                    )

        indices = [sensitivity_index(chain, p) for p in range(N_PARAMS)]
        with open(out / ARTIFACTS["sensitivity"], "w", newline="\n") as fh:
            fh.write("param,kld_nats\n")
            for p, v in enumerate(indices):
                fh.write("theta%d,%.17g\n" % (p + 1, v))

        corr = pairwise_correlation(chain)
        with open(out / ARTIFACTS["correlation"], "w", newline="\n") as fh:
            fh.write("param," + ",".join(f"theta{p + 1}" for p in range(N_PARAMS)) + "\n")
            for p in range(N_PARAMS):
                fh.write(
                    "theta%d,%s\n" % (p + 1, ",".join("%.17g" % v for v in corr.matrix[p]))
                )

        study = None
        if study_sizes:
            setup = setup or build_twin_setup(cfg)
            study = ensemble_size_study(
                setup.preset,
                setup.forcing,
                setup.obs_train,
                seed=stage_seed(cfg.seed, "study"),
                sizes=tuple(study_sizes),
                reference_size=cfg.members,
                workers=cfg.workers,
                spinup_cycles=cfg.spinup_cycles,
                mcmc_config=McmcConfig(
                    iterations=cfg.iterations,
                    proposal_sd=cfg.proposal_sd,
                    seed=stage_seed(cfg.seed, "mcmc"),
                ),
                cost_config=CostConfig(sigma_o=cfg.sigma_o),
                reference_chain=chain,
                ranges=_ranges_for(cfg, setup.preset),
            )
            study.to_csv(out / ARTIFACTS["study"])
        return stats, indices, corr, study
    except StageError:
        raise
    except Exception as exc:
        raise StageError("diagnose", exc) from exc


@dataclass
class MemberSeries:
    """Per-member evaluation series for one parameter ensemble."""

    tb_rmse: np.ndarray  # (N,) [K]
    lai_daily: np.ndarray  # (N, D)
    w1_daily: np.ndarray  # (N, D) surface soil moisture
    w3_daily: np.ndarray  # (N, D) deepest-layer soil moisture


def _run_eval_members(thetas, setup: TwinSetup, cfg: RunConfig, obs_eval) -> MemberSeries:
    from concurrent.futures import ThreadPoolExecutor

    n = len(thetas)
    n_days = setup.forcing.n_hours // 24
    out = MemberSeries(
        tb_rmse=np.empty(n),
        lai_daily=np.empty((n, n_days)),
        w1_daily=np.empty((n, n_days)),
        w3_daily=np.empty((n, n_days)),
    )

    def one(i: int):
        phys = denormalize(thetas[i], setup.ranges)
        traj = simulate(phys, setup.forcing, setup.preset, spinup_cycles=cfg.spinup_cycles)
        sim = observe(traj, obs_eval.times_h, setup.preset.channels, noise_sd=0.0)
        out.tb_rmse[i] = rmse(sim, obs_eval)
        out.lai_daily[i] = traj.daily_mean(traj.lai)
        out.w1_daily[i] = traj.daily_mean(traj.surface_sm)
        out.w3_daily[i] = traj.daily_mean(traj.rootzone_sm)

    if cfg.workers <= 1:
        for i in range(n):
            one(i)
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            list(pool.map(one, range(n)))
    return out


def stage_evaluate(cfg: RunConfig, setup: TwinSetup | None = None):
    """Compare posterior-drawn members against prior-drawn members.

    Scores brightness-temperature RMSE plus bias/ubRMSE of LAI, surface
    and deepest-layer soil moisture against the synthetic truth, and the
    improvement rates of each score.
    """
    try:
        setup = setup or build_twin_setup(cfg)
        out = _outdir(cfg)
        chain = load_chain(out / ARTIFACTS["chain"])

        rng = np.random.default_rng(stage_seed(cfg.seed, "eval"))
        idx = rng.integers(0, chain.n_samples, size=cfg.members)
        posterior_thetas = chain.samples[idx]
        prior_thetas = prior_sample(rng, cfg.members)

        if cfg.split:
            cut = TRAIN_YEARS_SPLIT * HOURS_PER_YEAR
            keep = setup.obs.times_h >= cut
            obs_eval = observe(setup.truth, setup.obs.times_h[keep], setup.preset.channels)
            if cfg.obs_noise_sd > 0.0:
                obs_eval.tb = setup.obs.tb[keep]
            day_lo = TRAIN_YEARS_SPLIT * 365
        else:
            obs_eval = setup.obs
            day_lo = 0

        post = _run_eval_members(posterior_thetas, setup, cfg, obs_eval)
        prior = _run_eval_members(prior_thetas, setup, cfg, obs_eval)

        truth_lai = setup.truth.daily_mean(setup.truth.lai)[day_lo:]
        truth_w1 = setup.truth.daily_mean(setup.truth.surface_sm)[day_lo:]
        truth_w3 = setup.truth.daily_mean(setup.truth.rootzone_sm)[day_lo:]

        rows = []
        tb_prior = float(np.median(prior.tb_rmse))
        tb_post = float(np.median(post.tb_rmse))
        rows.append(("tb", "median_rmse", tb_prior, tb_post, improvement_rate(tb_post, tb_prior)))
        for name, sims_post, sims_prior, truth_series in (
            ("lai", post.lai_daily, prior.lai_daily, truth_lai),
            ("surface_sm", post.w1_daily, prior.w1_daily, truth_w1),
            ("rootzone_sm", post.w3_daily, prior.w3_daily, truth_w3),
        ):
            for metric, fn in (("bias_ens", bias_ens), ("ubrmse_ens", ubrmse_ens)):
                s_prior = fn(sims_prior[:, day_lo:], truth_series)
                s_post = fn(sims_post[:, day_lo:], truth_series)
                rows.append((name, metric, s_prior, s_post, improvement_rate(s_post, s_prior)))

        with open(out / ARTIFACTS["scores"], "w", newline="\n") as fh:
            fh.write("variable,metric,prior,posterior,improvement_rate\n")
            for var, metric, s_prior, s_post, ir in rows:
                fh.write("%s,%s,%.17g,%.17g,%.17g\n" % (var, metric, s_prior, s_post, ir))
        return rows
    except StageError:
        raise
    except Exception as exc:
        raise StageError("evaluate", exc) from exc


def measure_speedup(cfg: RunConfig, setup: TwinSetup, model, n_surrogate_evals: int = 2000) -> dict:
    """Wall-clock throughput of the full model vs the surrogate cost."""
    cost_cfg = CostConfig(sigma_o=cfg.sigma_o)
    t0 = time.perf_counter()
    phys = denormalize(np.array(TRUTH_THETA), setup.ranges)
    traj = simulate(phys, setup.forcing, setup.preset, spinup_cycles=cfg.spinup_cycles)
    sim = observe(traj, setup.obs_train.times_h, setup.preset.channels)
    rmse(sim, setup.obs_train)
    full_model_s = time.perf_counter() - t0

    rng = np.random.default_rng(0)
    thetas = rng.random((n_surrogate_evals, N_PARAMS))
    t0 = time.perf_counter()
    for th in thetas:
        predict_cost(model, th, cost_cfg)
    surrogate_s_per_eval = (time.perf_counter() - t0) / n_surrogate_evals

    return {
        "full_model_s_per_run": full_model_s,
        "surrogate_s_per_1e5_evals": surrogate_s_per_eval * 1e5,
        "throughput_ratio": full_model_s / surrogate_s_per_eval,
    }


def run_twin(cfg: RunConfig, export_forcing: bool = False, study_sizes: tuple = ()):
    """Full synthetic-twin experiment; writes every artifact plus a summary."""
    out = _outdir(cfg)
    timings = []

    def timed(name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        result = fn(*args, **kwargs)
        timings.append((name, time.perf_counter() - t0))
        return result

    setup = timed("setup", build_twin_setup, cfg)
    timed("ensemble", stage_ensemble, cfg, setup=setup, export_forcing=export_forcing)
    model = timed("fit", stage_fit, cfg)
    chain = timed("sample", stage_sample, cfg)
    stats, indices, corr, _ = timed("diagnose", stage_diagnose, cfg, study_sizes=study_sizes, setup=setup)
    rows = timed("evaluate", stage_evaluate, cfg, setup=setup)

    speed = measure_speedup(cfg, setup, model)
    mcmc_s = dict(timings)["sample"]
    fit_s = dict(timings)["fit"]
    direct = cfg.iterations * speed["full_model_s_per_run"]
    surrogate_pipeline = (
        cfg.members * speed["full_model_s_per_run"] / cfg.workers + fit_s + mcmc_s
    )
    speed["extrapolated_pipeline_speedup"] = direct / surrogate_pipeline

    _write_summary(out, cfg, chain, stats, indices, corr, rows, model)
    with open(out / ARTIFACTS["timing"], "w", newline="\n") as fh:
        fh.write("stage,seconds\n")
        for name, secs in timings:
            fh.write("%s,%.6f\n" % (name, secs))
        for key, value in speed.items():
            fh.write("%s,%.6g\n" % (key, value))
    return chain


def _write_summary(out, cfg, chain: Chain, stats, indices, corr, score_rows, model) -> None:
    var = predict_norm_rmse_var(model, model.x_train)
    lines = [
        f"scenario={cfg.scenario}",
        f"seed={cfg.seed}",
        f"members={cfg.members}",
        f"iterations={cfg.iterations}",
        f"split={'true' if cfg.split else 'false'}",
        "truth_theta=" + ",".join("%.17g" % t for t in TRUTH_THETA),
        "posterior_median=" + ",".join("%.17g" % m for m in stats.medians),
        "posterior_mode=" + ",".join("%.17g" % m for m in stats.modes),
        "mode_abs_error="
        + ",".join("%.17g" % abs(m - t) for m, t in zip(stats.modes, TRUTH_THETA)),
        "sensitivity_index=" + ",".join("%.17g" % v for v in indices),
        "corr_theta3_theta4=%.17g" % corr.matrix[2, 3],
        "acceptance_rate=%.17g" % chain.acceptance_rate,
        "gp_length_scales=" + ",".join("%.17g" % v for v in model.hyper.length_scales),
        "gp_signal_variance=%.17g" % model.hyper.signal_variance,
        "gp_noise_variance=%.17g" % model.hyper.noise_variance,
        "rmse_min_K=%.17g" % model.rmse_min,
        "rmse_max_K=%.17g" % model.rmse_max,
        "gp_mean_predictive_sd=%.17g" % float(np.sqrt(var).mean()),
    ]
    for varname, metric, s_prior, s_post, ir in score_rows:
        lines.append(
            "score_%s_%s=prior:%.17g,posterior:%.17g,improvement_rate:%.17g"
            % (varname, metric, s_prior, s_post, ir)
        )
    with open(out / ARTIFACTS["summary"], "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
