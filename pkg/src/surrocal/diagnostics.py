"""Posterior and ensemble diagnostics.

Covers the information-theoretic sensitivity index (KLD of the marginal
posterior against the uniform prior), pairwise parameter correlations
for equifinality detection, ensemble skill scores (bias, unbiased RMSE,
improvement rates) and the ensemble-size sensitivity study.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import EnsembleDataset, lhs_sample, run_ensemble
from .errors import AlignmentError, DomainError
from .mcmc import Chain, McmcConfig, metropolis_hastings
from .params import N_PARAMS

KLD_BINS = 20
KLD_Q_FLOOR = 1e-10


@dataclass
class Histogram:
    """Normalized histogram on fixed edges."""

    edges: np.ndarray  # (B + 1,)
    masses: np.ndarray  # (B,), sum to 1

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        if len(self.edges) != len(self.masses) + 1:
            raise DomainError("edges must have one more entry than masses")
        if np.any(np.diff(self.edges) <= 0.0):
            raise DomainError("edges must be strictly increasing")
        if np.any(self.masses < 0.0):
            raise DomainError("masses must be non-negative")
        if abs(self.masses.sum() - 1.0) > 1e-12:
            raise DomainError(f"masses must sum to 1, got {self.masses.sum()}")

    @property
    def n_bins(self) -> int:
        return len(self.masses)


def histogram_from_samples(samples, bins: int = KLD_BINS, lo: float = 0.0, hi: float = 1.0) -> Histogram:
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(np.asarray(samples, dtype=float), bins=edges)
    total = counts.sum()
    if total == 0:
        raise DomainError("no samples fall inside the histogram range")
    return Histogram(edges=edges, masses=counts / total)


def uniform_histogram(bins: int = KLD_BINS, lo: float = 0.0, hi: float = 1.0) -> Histogram:
    edges = np.linspace(lo, hi, bins + 1)
    return Histogram(edges=edges, masses=np.full(bins, 1.0 / bins))


def kld(p: Histogram, q: Histogram) -> float:
    """Kullback-Leibler divergence D(p || q) in nats.

    Requires identical binning. Bins with p = 0 contribute nothing; q is
    floored at a tiny mass and renormalized so lone empty q-bins cannot
    produce infinities (the perturbation is far below sampling noise).
    """
    if p.n_bins != q.n_bins or np.any(p.edges != q.edges):
        raise AlignmentError("histograms must share identical binning")
    qm = np.maximum(q.masses, KLD_Q_FLOOR)
    qm = qm / qm.sum()
    mask = p.masses > 0.0
    return float(np.sum(p.masses[mask] * np.log(p.masses[mask] / qm[mask])))


def sensitivity_index(chain: Chain, param_index: int, bins: int = KLD_BINS) -> float:
    """KLD of the marginal posterior against the uniform prior.

    Large values flag parameters the observations constrain strongly; an
    exactly uniform marginal scores 0.
    """
    if not (0 <= param_index < N_PARAMS):
        raise DomainError(f"param_index must lie in [0, {N_PARAMS}), got {param_index}")
    post = histogram_from_samples(chain.samples[:, param_index], bins=bins)
    return kld(post, uniform_histogram(bins))


@dataclass
class CorrelationResult:
    matrix: np.ndarray  # (4, 4) Pearson correlations
    degenerate: np.ndarray  # (4,) bool, True where a dimension had zero variance


def pairwise_correlation(chain: Chain) -> CorrelationResult:
    """Pearson correlations between sampled parameters.

    Zero-variance dimensions are flagged and their correlations reported
    as 0 (the statistic is undefined there).
    """
    if chain.n_samples < 2:
        raise DomainError("need at least 2 samples for correlations")
    x = chain.samples
    std = x.std(axis=0)
    degenerate = std == 0.0
    matrix = np.eye(N_PARAMS)
    for i in range(N_PARAMS):
        for j in range(i + 1, N_PARAMS):
            if degenerate[i] or degenerate[j]:
                r = 0.0
            else:
                xi = x[:, i] - x[:, i].mean()
                xj = x[:, j] - x[:, j].mean()
                r = float((xi @ xj) / (len(x) * std[i] * std[j]))
            matrix[i, j] = matrix[j, i] = r
    return CorrelationResult(matrix=matrix, degenerate=degenerate)


def _aligned(sims, obs) -> tuple:
    sims = np.atleast_2d(np.asarray(sims, dtype=float))
    obs = np.asarray(obs, dtype=float)
    if sims.shape[1] != len(obs):
        raise AlignmentError(f"series lengths differ: {sims.shape[1]} vs {len(obs)}")
    return sims, obs


def bias_ens(sims, obs) -> float:
    """Root-mean-square over members of each member's temporal-mean bias."""
    sims, obs = _aligned(sims, obs)
    member_bias = (sims - obs).mean(axis=1)
    return float(np.sqrt(np.mean(member_bias**2)))


def ubrmse_ens(sims, obs) -> float:
    """Ensemble-mean unbiased RMSE.

    The simulated anomaly reference is the time mean of the ensemble mean
    (one scalar shared by all members); the observed reference is the
    time mean of the observations.
    """
    sims, obs = _aligned(sims, obs)
    e_f = sims.mean()  # temporally averaged ensemble mean
    e_o = obs.mean()
    dev = (sims - e_f) - (obs - e_o)
    return float(np.mean(np.sqrt(np.mean(dev**2, axis=1))))


def improvement_rate(s_mcmc: float, s_unif: float) -> float:
    """(S_mcmc - S_unif) / S_unif; negative values mean improvement."""
    if s_unif == 0.0:
        raise DomainError("improvement rate undefined: reference score is zero")
    return (s_mcmc - s_unif) / s_unif


def r_squared(predicted, actual) -> float:
    """Coefficient of determination of predictions against a validation set."""
    predicted = np.asarray(predicted, dtype=float)
    actual = np.asarray(actual, dtype=float)
    ss_res = float(np.sum((actual - predicted) ** 2))
    ss_tot = float(np.sum((actual - actual.mean()) ** 2))
    if ss_tot == 0.0:
        raise DomainError("validation targets have zero variance")
    return 1.0 - ss_res / ss_tot


@dataclass
class SizeStudyResult:
    """KLD of each smaller-ensemble posterior against the reference posterior."""

    sizes: tuple
    reference_size: int
    table: np.ndarray  # (len(sizes), 4) KLD in nats

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("size," + ",".join(f"kld_theta{p + 1}" for p in range(N_PARAMS)) + "\n")
            for s, row in zip(self.sizes, self.table):
                fh.write("%d,%s\n" % (s, ",".join("%.17g" % v for v in row)))


def ensemble_size_study(
    preset,
    forcing,
    obs,
    seed: int,
    sizes: tuple = (50, 100, 200, 300),
    reference_size: int = 400,
    workers: int = 1,
    spinup_cycles: int = 4,
    mcmc_config: McmcConfig | None = None,
    cost_config=None,
    reference_chain: Chain | None = None,
    bins: int = KLD_BINS,
    ranges=None,
) -> SizeStudyResult:
    """Repeat design -> fit -> sample for several ensemble sizes.

    Each size gets an independently seeded design (fresh stratification,
    not a nested subset). A size equal to the reference reuses the
    reference posterior, so its KLD is exactly zero. The reference chain
    can be passed in when the caller already ran the full pipeline.
    """
    from .ensemble import CostConfig  # local import keeps module deps one-way
    from .surrogate import fit, predict_cost

    cost_config = cost_config or CostConfig()
    mcmc_config = mcmc_config or McmcConfig()

    def posterior_for(size: int, size_seed: int) -> Chain:
        design = lhs_sample(size, N_PARAMS, seed=size_seed)
        data = run_ensemble(
            design, preset, obs, forcing, workers=workers,
            spinup_cycles=spinup_cycles, master_seed=size_seed, ranges=ranges,
        )
        model = fit(data, seed=size_seed)
        cfg = McmcConfig(
            iterations=mcmc_config.iterations,
            proposal_sd=mcmc_config.proposal_sd,
            initial_theta=mcmc_config.initial_theta.copy(),
            seed=mcmc_config.seed,
            burn_in=mcmc_config.burn_in,
        )
        return metropolis_hastings(
            lambda th: predict_cost(model, th, cost_config), cfg,
            costfn_id=f"surrogate:{preset.name}:n{size}",
        )

    if reference_chain is None:
        reference_chain = posterior_for(reference_size, seed)
    ref_hists = [
        histogram_from_samples(reference_chain.samples[:, p], bins=bins) for p in range(N_PARAMS)
    ]

    table = np.zeros((len(sizes), N_PARAMS))
    for row, size in enumerate(sizes):
        if size == reference_size:
            continue  # identical posterior by construction: KLD = 0
        chain = posterior_for(size, seed + 1 + row)
        for p in range(N_PARAMS):
            hist = histogram_from_samples(chain.samples[:, p], bins=bins)
            table[row, p] = kld(hist, ref_hists[p])
    return SizeStudyResult(sizes=tuple(sizes), reference_size=reference_size, table=table)
