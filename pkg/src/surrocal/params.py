"""Scaled calibration parameters, their physical counterparts, and the prior.

Four parameters are calibrated: saturated hydraulic conductivity ``ks``,
the van Genuchten shape parameter ``n``, the maximum Rubisco capacity
``vmax0``, and the carbon-pool ratio factor ``es``.  Each is represented
by a scaled component theta in [0, 1] that maps to a multiplier of a
per-scenario default value:

    physical = default * (theta_min + (theta_max - theta_min) * theta)

The multiplier endpoints are dimensionless and the same for every
scenario; the defaults come from the scenario preset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

N_PARAMS = 4
PARAM_NAMES = ("ks", "n", "vmax0", "es")

# Multiplier endpoints of the four scaled parameters (theta = 0 and theta = 1).
MULTIPLIER_MIN = (0.5, 0.8, 0.5, 0.25)
MULTIPLIER_MAX = (1.5, 1.2, 1.5, 1.75)

# Scaled parameter vector used to generate synthetic-twin truth runs.
TRUTH_THETA = (0.75, 0.4, 0.25, 0.6)

# The van Genuchten exponents n/(n-1) diverge at n = 1; keep n above this.
N_FLOOR = 1.01

ROUND_TRIP_TOL = 1e-12


@dataclass(frozen=True)
class PhysicalParams:
    """Physical values of the four calibrated parameters."""

    ks: float  # saturated hydraulic conductivity [m/s]
    n: float  # van Genuchten shape parameter [-], > 1
    vmax0: float  # maximum Rubisco capacity [mol m-2 s-1]
    es: float  # carbon-pool ratio factor [-]

    def __post_init__(self):
        if not self.ks > 0.0:
            raise DomainError(f"ks must be > 0, got {self.ks}")
        if not self.n > 1.0:
            raise DomainError(f"n must be > 1, got {self.n}")
        if not self.vmax0 > 0.0:
            raise DomainError(f"vmax0 must be > 0, got {self.vmax0}")
        if not self.es > 0.0:
            raise DomainError(f"es must be > 0, got {self.es}")


@dataclass
class ParamRanges:
    """Multiplier endpoints plus per-scenario default values."""

    ks_def: float  # [m/s]
    n_def: float  # [-]
    vmax0_def: float  # [mol m-2 s-1]
    es_def: float  # [-]
    theta_min: np.ndarray = field(default_factory=lambda: np.array(MULTIPLIER_MIN))
    theta_max: np.ndarray = field(default_factory=lambda: np.array(MULTIPLIER_MAX))

    def __post_init__(self):
        self.theta_min = np.asarray(self.theta_min, dtype=float)
        self.theta_max = np.asarray(self.theta_max, dtype=float)
        if self.theta_min.shape != (N_PARAMS,) or self.theta_max.shape != (N_PARAMS,):
            raise DomainError("theta_min/theta_max must have one entry per parameter")
        if not np.all(self.theta_min < self.theta_max):
            raise DomainError("theta_min must be strictly below theta_max for every parameter")
        for name in ("ks_def", "n_def", "vmax0_def", "es_def"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be strictly positive")

    @property
    def defaults(self) -> np.ndarray:
        return np.array([self.ks_def, self.n_def, self.vmax0_def, self.es_def])


def validate_theta(theta) -> np.ndarray:
    """Check a scaled parameter vector and return it as a float array."""
    arr = np.asarray(theta, dtype=float)
    if arr.shape != (N_PARAMS,):
        raise DomainError(f"theta must have shape ({N_PARAMS},), got {arr.shape}")
    for i, name in enumerate(PARAM_NAMES):
        if not (0.0 <= arr[i] <= 1.0):
            raise DomainError(f"theta[{i}] ({name}) = {arr[i]} outside [0, 1]")
    return arr


def denormalize(theta, ranges: ParamRanges) -> PhysicalParams:
    """Map a scaled parameter vector to physical parameter values."""
    arr = validate_theta(theta)
    mult = ranges.theta_min + (ranges.theta_max - ranges.theta_min) * arr
    phys = ranges.defaults * mult
    n = max(float(phys[1]), N_FLOOR)
    return PhysicalParams(ks=float(phys[0]), n=n, vmax0=float(phys[2]), es=float(phys[3]))


def normalize(physical: PhysicalParams, ranges: ParamRanges) -> np.ndarray:
    """Invert :func:`denormalize`; round-trips within 1e-12 per component."""
    phys = np.array([physical.ks, physical.n, physical.vmax0, physical.es])
    mult = phys / ranges.defaults
    theta = (mult - ranges.theta_min) / (ranges.theta_max - ranges.theta_min)
    for i, name in enumerate(PARAM_NAMES):
        if theta[i] < -ROUND_TRIP_TOL or theta[i] > 1.0 + ROUND_TRIP_TOL:
            raise DomainError(
                f"physical {name} = {phys[i]} maps to theta = {theta[i]}, "
                f"outside the representable multiplier range"
            )
    return np.clip(theta, 0.0, 1.0)


def prior_sample(rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Draw from the bounded uniform prior on [0, 1]^4.

    Returns a (4,) vector, or an (n, 4) matrix when ``n`` is given.
    """
    if n is None:
        return rng.random(N_PARAMS)
    return rng.random((n, N_PARAMS))
