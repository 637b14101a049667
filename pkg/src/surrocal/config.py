"""Run configuration: key=value files with documented defaults."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kv import read_kv_file, write_kv_file
from .errors import DomainError, ParseError
from .params import MULTIPLIER_MAX, MULTIPLIER_MIN, N_PARAMS
from .presets import SCENARIO_NAMES

DEFAULT_SEED = 42


@dataclass
class RunConfig:
    scenario: str = "site1"
    years: int = 8
    spinup_cycles: int = 4
    members: int = 400
    iterations: int = 100_000
    proposal_sd: float = 0.1
    sigma_o: float = 1.0  # [K]
    obs_noise_sd: float = 0.0  # [K], 0 for synthetic twins
    seed: int = DEFAULT_SEED
    workers: int = 1
    outdir: str = "out"
    split: bool = False  # 3-year training window, remainder for evaluation
    preset_path: str = ""  # optional override of the packaged preset file
    theta_min: np.ndarray = field(default_factory=lambda: np.array(MULTIPLIER_MIN))
    theta_max: np.ndarray = field(default_factory=lambda: np.array(MULTIPLIER_MAX))

    def __post_init__(self):
        if self.scenario not in SCENARIO_NAMES and not self.preset_path:
            raise DomainError(
                f"unknown scenario {self.scenario!r} and no preset file given"
            )
        for name in ("years", "spinup_cycles", "members", "iterations", "workers"):
            if getattr(self, name) < 1 and not (name == "spinup_cycles" and self.spinup_cycles == 0):
                raise DomainError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.proposal_sd > 0.0:
            raise DomainError(f"proposal_sd must be > 0, got {self.proposal_sd}")
        if not self.sigma_o > 0.0:
            raise DomainError(f"sigma_o must be > 0, got {self.sigma_o}")
        if self.obs_noise_sd < 0.0:
            raise DomainError(f"obs_noise_sd must be >= 0, got {self.obs_noise_sd}")
        if self.split and self.years <= 3:
            raise DomainError("split mode needs more than 3 years")
        self.theta_min = np.asarray(self.theta_min, dtype=float)
        self.theta_max = np.asarray(self.theta_max, dtype=float)
        if not np.all(self.theta_min < self.theta_max):
            raise DomainError("theta range overrides must satisfy min < max")


_INT_KEYS = ("years", "spinup_cycles", "members", "iterations", "seed", "workers")
_FLOAT_KEYS = ("proposal_sd", "sigma_o", "obs_noise_sd")
_STR_KEYS = ("scenario", "outdir", "preset_path")
_BOOL_KEYS = ("split",)
_RANGE_KEYS = tuple(f"theta{i + 1}_{side}" for i in range(N_PARAMS) for side in ("min", "max"))


def _parse_int(raw: str) -> int:
    # accepts scientific notation for counts, e.g. iterations=1e5
    value = float(raw)
    if value != int(value):
        raise ValueError(f"{raw!r} is not an integer")
    return int(value)


def parse_config(path) -> RunConfig:
    """Read a run configuration; unknown keys and bad values raise."""
    path = Path(path)
    values, lines = read_kv_file(path)
    kwargs = {}
    theta_min = np.array(MULTIPLIER_MIN)
    theta_max = np.array(MULTIPLIER_MAX)
    for key, raw in values.items():
        try:
            if key in _INT_KEYS:
                kwargs[key] = _parse_int(raw)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(raw)
            elif key in _STR_KEYS:
                kwargs[key] = raw
            elif key in _BOOL_KEYS:
                if raw.lower() not in ("true", "false", "0", "1"):
                    raise ValueError(f"expected a boolean, got {raw!r}")
                kwargs[key] = raw.lower() in ("true", "1")
            elif key in _RANGE_KEYS:
                idx = int(key[5]) - 1
                if key.endswith("min"):
                    theta_min[idx] = float(raw)
                else:
                    theta_max[idx] = float(raw)
            else:
                raise ParseError(f"unknown key {key!r}", path=str(path), line=lines[key])
        except ParseError:
            raise
        except (ValueError, DomainError) as exc:
            raise ParseError(f"bad value for {key!r}: {exc}", path=str(path), line=lines[key]) from exc
    try:
        return RunConfig(theta_min=theta_min, theta_max=theta_max, **kwargs)
    except DomainError as exc:
        raise ParseError(str(exc), path=str(path)) from exc


def save_config(cfg: RunConfig, path) -> None:
    items = [
        ("scenario", cfg.scenario),
        ("years", str(cfg.years)),
        ("spinup_cycles", str(cfg.spinup_cycles)),
        ("members", str(cfg.members)),
        ("iterations", str(cfg.iterations)),
        ("proposal_sd", "%.17g" % cfg.proposal_sd),
        ("sigma_o", "%.17g" % cfg.sigma_o),
        ("obs_noise_sd", "%.17g" % cfg.obs_noise_sd),
        ("seed", str(cfg.seed)),
        ("workers", str(cfg.workers)),
        ("outdir", cfg.outdir),
        ("split", "true" if cfg.split else "false"),
    ]
    if cfg.preset_path:
        items.append(("preset_path", cfg.preset_path))
    for i in range(N_PARAMS):
        if cfg.theta_min[i] != MULTIPLIER_MIN[i]:
            items.append((f"theta{i + 1}_min", "%.17g" % cfg.theta_min[i]))
        if cfg.theta_max[i] != MULTIPLIER_MAX[i]:
            items.append((f"theta{i + 1}_max", "%.17g" % cfg.theta_max[i]))
    write_kv_file(path, items, comment="run configuration")
