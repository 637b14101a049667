"""Metropolis-Hastings sampler over a positive cost on [0, 1]^4.

Proposals are isotropic Gaussian steps; candidates outside the unit
hypercube are rejected immediately (the bounded uniform prior has zero
density there). The acceptance ratio is cost(candidate)/cost(current)
with acceptance when the uniform draw b satisfies b <= a, so the chain
targets the density proportional to the cost. The retained state is
recorded at every iteration, accepted or not.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, NumericalError, ParseError
from .params import N_PARAMS, validate_theta

CHAIN_CSV_HEADER = "iter,theta1,theta2,theta3,theta4,accepted"

DEFAULT_ITERATIONS = 100_000
DEFAULT_PROPOSAL_SD = 0.1


@dataclass
class McmcConfig:
    iterations: int = DEFAULT_ITERATIONS
    proposal_sd: float = DEFAULT_PROPOSAL_SD
    initial_theta: np.ndarray = field(default_factory=lambda: np.full(N_PARAMS, 0.5))
    seed: int = 0
    burn_in: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise DomainError(f"iterations must be >= 1, got {self.iterations}")
        if not self.proposal_sd > 0.0:
            raise DomainError(f"proposal_sd must be > 0, got {self.proposal_sd}")
        if not (0 <= self.burn_in < self.iterations):
            raise DomainError(f"burn_in must lie in [0, iterations), got {self.burn_in}")
        self.initial_theta = validate_theta(self.initial_theta)


@dataclass
class Chain:
    """Retained states of one sampler run (the non-parametric posterior)."""

    samples: np.ndarray  # (iterations - burn_in, 4)
    accepted: np.ndarray  # (iterations - burn_in,) bool
    acceptance_count: int  # accepted proposals over the whole run
    iterations: int
    burn_in: int
    seed: int
    costfn_id: str = ""

    @property
    def acceptance_rate(self) -> float:
        return self.acceptance_count / self.iterations

    @property
    def n_samples(self) -> int:
        return len(self.samples)


def propose(current: np.ndarray, sd: float, rng: np.random.Generator) -> np.ndarray:
    """Gaussian candidate around the current state; may leave [0, 1]^4."""
    return current + rng.normal(0.0, sd, size=N_PARAMS)


def metropolis_hastings(costfn, cfg: McmcConfig, costfn_id: str = "") -> Chain:
    """Run the sampler; deterministic per (costfn, cfg.seed).

    The uniform acceptance draw is consumed only for in-bounds candidates,
    which keeps the random stream a pure function of the candidate path.
    """
    rng = np.random.default_rng(cfg.seed)
    current = cfg.initial_theta.copy()
    current_cost = float(costfn(current))
    if not np.isfinite(current_cost) or current_cost <= 0.0:
        raise NumericalError(f"cost at the initial state is unusable: {current_cost}")

    n_keep = cfg.iterations - cfg.burn_in
    samples = np.empty((n_keep, N_PARAMS))
    accepted_flags = np.zeros(n_keep, dtype=bool)
    n_accepted = 0

    for i in range(cfg.iterations):
        candidate = propose(current, cfg.proposal_sd, rng)
        if np.all(candidate >= 0.0) and np.all(candidate <= 1.0):
            cand_cost = float(costfn(candidate))
            if not np.isfinite(cand_cost):
                raise NumericalError(f"non-finite cost at iteration {i}: {cand_cost}")
            a = cand_cost / current_cost
            b = rng.random()
            if b <= a:
                current = candidate
                current_cost = cand_cost
                n_accepted += 1
                if i >= cfg.burn_in:
                    accepted_flags[i - cfg.burn_in] = True
        if i >= cfg.burn_in:
            samples[i - cfg.burn_in] = current

    return Chain(
        samples=samples,
        accepted=accepted_flags,
        acceptance_count=n_accepted,
        iterations=cfg.iterations,
        burn_in=cfg.burn_in,
        seed=cfg.seed,
        costfn_id=costfn_id,
    )


@dataclass
class ChainStats:
    """Per-parameter marginal summaries of a chain."""

    bin_edges: np.ndarray  # (bins + 1,)
    masses: np.ndarray  # (4, bins), each row sums to 1
    medians: np.ndarray  # (4,)
    modes: np.ndarray  # (4,) center of the highest-mass bin

    @property
    def n_bins(self) -> int:
        return self.masses.shape[1]


def chain_stats(chain: Chain, bins: int = 20) -> ChainStats:
    """Normalized marginal histograms on [0, 1], medians and modes.

    The mode is the center of the highest-count bin; ties resolve to the
    lowest-index bin.
    """
    if chain.n_samples == 0:
        raise DomainError("chain is empty")
    if bins < 2:
        raise DomainError(f"bins must be >= 2, got {bins}")
    edges = np.linspace(0.0, 1.0, bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    masses = np.empty((N_PARAMS, bins))
    medians = np.empty(N_PARAMS)
    modes = np.empty(N_PARAMS)
    for p in range(N_PARAMS):
        counts, _ = np.histogram(chain.samples[:, p], bins=edges)
        masses[p] = counts / counts.sum()
        medians[p] = np.median(chain.samples[:, p])
        modes[p] = centers[int(np.argmax(counts))]
    return ChainStats(bin_edges=edges, masses=masses, medians=medians, modes=modes)


def save_chain(chain: Chain, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(CHAIN_CSV_HEADER + "\n")
        fh.write(
            f"# iterations={chain.iterations} burn_in={chain.burn_in} "
            f"seed={chain.seed} acceptance_count={chain.acceptance_count} "
            f"costfn={chain.costfn_id}\n"
        )
        for i in range(chain.n_samples):
            s = chain.samples[i]
            fh.write(
                "%d,%.17g,%.17g,%.17g,%.17g,%d\n"
                % (i + chain.burn_in, s[0], s[1], s[2], s[3], int(chain.accepted[i]))
            )


def load_chain(path) -> Chain:
    path = Path(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CHAIN_CSV_HEADER:
        raise ParseError("not a chain file", path=str(path), line=1)
    meta = {"iterations": "0", "burn_in": "0", "seed": "0", "acceptance_count": "0", "costfn": ""}
    samples, flags = [], []
    for i, line in enumerate(lines[1:], start=2):
        if line.startswith("#"):
            for part in line[1:].strip().split(" "):
                k, _, v = part.partition("=")
                if k in meta:
                    meta[k] = v
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ParseError(f"expected 6 fields, got {len(parts)}", path=str(path), line=i)
        try:
            samples.append([float(p) for p in parts[1:5]])
            flags.append(bool(int(parts[5])))
        except ValueError as exc:
            raise ParseError(str(exc), path=str(path), line=i) from exc
    if not samples:
        raise ParseError("chain file holds no samples", path=str(path))
    return Chain(
        samples=np.array(samples),
        accepted=np.array(flags, dtype=bool),
        acceptance_count=int(meta["acceptance_count"]),
        iterations=int(meta["iterations"]),
        burn_in=int(meta["burn_in"]),
        seed=int(meta["seed"]),
        costfn_id=meta["costfn"],
    )
