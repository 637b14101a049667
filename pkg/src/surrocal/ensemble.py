"""Latin hypercube design, ensemble execution and the cost function.

The ensemble stage maps a set of scaled parameter vectors through the
full forward model and scores each member by the pooled brightness
temperature RMSE against the observations. Members are independent pure
computations, so results are identical for any worker count; member i
draws from a private stream seeded with master_seed XOR i.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AlignmentError, DomainError, ParseError
from .model import DEFAULT_SPINUP_CYCLES, simulate
from .params import N_PARAMS, denormalize
from .rtm import ObservationSeries, observe

DATASET_CSV_HEADER = "member,theta1,theta2,theta3,theta4,rmse_K"


@dataclass
class CostConfig:
    """Observation-error scale of the cost transform."""

    sigma_o: float = 1.0  # [K]

    def __post_init__(self):
        if not self.sigma_o > 0.0:
            raise DomainError(f"sigma_o must be > 0, got {self.sigma_o}")


@dataclass
class EnsembleDataset:
    """Training records (theta, RMSE) for the surrogate."""

    thetas: np.ndarray  # (N, 4) scaled parameters
    rmse: np.ndarray  # (N,) [K]
    scenario: str = ""
    seed: int = 0
    failures: tuple = ()  # ((member_index, reason), ...)

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float)
        self.rmse = np.asarray(self.rmse, dtype=float)
        if self.thetas.ndim != 2 or self.thetas.shape[1] != N_PARAMS:
            raise DomainError(f"thetas must have shape (N, {N_PARAMS})")
        if len(self.rmse) != len(self.thetas):
            raise DomainError("thetas and rmse lengths differ")
        if len(self.rmse) < 2:
            raise DomainError("a dataset needs at least 2 members")
        if np.any(~np.isfinite(self.rmse)) or np.any(self.rmse < 0.0):
            raise DomainError("rmse values must be finite and >= 0")
        if np.any(self.thetas < 0.0) or np.any(self.thetas > 1.0):
            raise DomainError("thetas must lie in [0, 1]")

    @property
    def n_members(self) -> int:
        return len(self.rmse)

    @property
    def partial(self) -> bool:
        return len(self.failures) > 0


def lhs_sample(n_members: int, n_dims: int = N_PARAMS, seed: int = 0) -> np.ndarray:
    """Latin hypercube design on [0, 1]^n_dims.

    Per dimension, exactly one sample falls in each of the n_members
    stratification bins, uniformly placed within its bin. Deterministic
    per seed.
    """
    if n_members < 1:
        raise DomainError(f"n_members must be >= 1, got {n_members}")
    rng = np.random.default_rng(seed)
    out = np.empty((n_members, n_dims))
    for d in range(n_dims):
        perm = rng.permutation(n_members)
        u = rng.random(n_members)
        out[:, d] = (perm + u) / n_members
    return out


def rmse(sim: ObservationSeries, obs: ObservationSeries) -> float:
    """Root-mean-square difference pooled over all times and channels [K]."""
    if sim.channel_labels != obs.channel_labels:
        raise AlignmentError(
            f"channel mismatch: {sim.channel_labels} vs {obs.channel_labels}"
        )
    if len(sim.times_h) != len(obs.times_h) or np.any(sim.times_h != obs.times_h):
        raise AlignmentError("observation timestamps differ")
    diff = sim.tb - obs.tb
    return float(np.sqrt(np.mean(diff * diff)))


def cost(rmse_value: float, cfg: CostConfig) -> float:
    """Cost C = exp(-RMSE / sigma_o); in (0, 1], decreasing in RMSE."""
    if rmse_value < 0.0:
        raise DomainError(f"rmse must be >= 0, got {rmse_value}")
    return float(np.exp(-rmse_value / cfg.sigma_o))


def run_ensemble(
    thetas: np.ndarray,
    preset,
    obs: ObservationSeries,
    forcing,
    workers: int = 1,
    spinup_cycles: int = DEFAULT_SPINUP_CYCLES,
    master_seed: int = 0,
    ranges=None,
) -> EnsembleDataset:
    """Score every member through simulate -> observe (noiseless) -> rmse.

    ``forcing`` must be the series the observations were generated on.
    Failed members are recorded with their index and reason and the
    dataset is marked partial.
    """
    thetas = np.asarray(thetas, dtype=float)
    ranges = ranges if ranges is not None else preset.ranges()
    n = len(thetas)

    def run_member(i: int) -> float:
        phys = denormalize(thetas[i], ranges)
        traj = simulate(phys, forcing, preset, spinup_cycles=spinup_cycles)
        member_rng = np.random.default_rng(master_seed ^ i)
        sim = observe(traj, obs.times_h, _channels(preset, obs), noise_sd=0.0, rng=member_rng)
        return rmse(sim, obs)

    scores = np.full(n, np.nan)
    failures = []
    if workers <= 1:
        for i in range(n):
            try:
                scores[i] = run_member(i)
            except Exception as exc:  # recorded, not raised: dataset marked partial
                failures.append((i, f"{type(exc).__name__}: {exc}"))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {i: pool.submit(run_member, i) for i in range(n)}
        for i in range(n):
            try:
                scores[i] = futs[i].result()
            except Exception as exc:
                failures.append((i, f"{type(exc).__name__}: {exc}"))

    ok = np.isfinite(scores)
    return EnsembleDataset(
        thetas=thetas[ok],
        rmse=scores[ok],
        scenario=preset.name,
        seed=master_seed,
        failures=tuple(failures),
    )


def _channels(preset, obs: ObservationSeries):
    by_label = {ch.label: ch for ch in preset.channels}
    try:
        return tuple(by_label[lab] for lab in obs.channel_labels)
    except KeyError as exc:
        raise AlignmentError(f"preset has no channel {exc.args[0]!r}") from exc


def save_dataset(dataset: EnsembleDataset, path) -> None:
    """Write the dataset as CSV at full precision (lossless round-trip)."""
    with open(path, "w", newline="\n") as fh:
        fh.write(DATASET_CSV_HEADER + "\n")
        fh.write(f"# scenario={dataset.scenario} seed={dataset.seed}\n")
        for idx, reason in dataset.failures:
            fh.write(f"# failed_member={idx} reason={reason}\n")
        for i in range(dataset.n_members):
            t = dataset.thetas[i]
            fh.write(
                "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                % (i, t[0], t[1], t[2], t[3], dataset.rmse[i])
            )


def load_dataset(path) -> EnsembleDataset:
    path = Path(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or all(not ln.strip() for ln in lines):
        raise ParseError("empty dataset file", path=str(path))
    if lines[0] != DATASET_CSV_HEADER:
        raise ParseError(f"unexpected header {lines[0]!r}", path=str(path), line=1)
    scenario, seed = "", 0
    failures = []
    thetas, scores = [], []
    for i, line in enumerate(lines[1:], start=2):
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("scenario="):
                fields = dict(p.split("=", 1) for p in body.split(" ") if "=" in p)
                scenario = fields.get("scenario", "")
                seed = int(fields.get("seed", "0"))
            elif body.startswith("failed_member="):
                idx_part, _, reason = body.partition(" reason=")
                failures.append((int(idx_part.split("=", 1)[1]), reason))
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ParseError(f"expected 6 fields, got {len(parts)}", path=str(path), line=i)
        try:
            thetas.append([float(p) for p in parts[1:5]])
            scores.append(float(parts[5]))
        except ValueError as exc:
            raise ParseError(str(exc), path=str(path), line=i) from exc
    if not thetas:
        raise ParseError("dataset file holds no records", path=str(path))
    return EnsembleDataset(
        thetas=np.array(thetas),
        rmse=np.array(scores),
        scenario=scenario,
        seed=seed,
        failures=tuple(failures),
    )
