"""van Genuchten soil hydraulics for the 3-layer toy column.

Retention and conductivity follow the closed forms of van Genuchten (1980)
with m = 1 - 1/n:

    S(w)   = (w - w_r) / (w_s - w_r)
    psi(w) = (1/alpha) * (S^(-1/m) - 1)^(1/n)          [m of suction]
    K(w)   = K_s * S^(1/2) * [1 - (1 - S^(1/m))^m]^2   [m/s]

psi is zero at saturation and diverges as w -> w_r, so callers must keep
w strictly above the residual content when evaluating suction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

log = logging.getLogger(__name__)

# Layer thicknesses [m]: 5 cm surface layer over two 10 cm layers.
LAYER_DEPTHS = (0.05, 0.10, 0.10)
N_LAYERS = 3

# Fraction of transpiration extracted from each layer.
ROOT_FRACTIONS = (0.3, 0.4, 0.3)

# Numerical drift beyond the [w_r, w_s] interval tolerated (and clamped)
# before effective_saturation treats the input as a genuine domain error.
SATURATION_DRIFT_TOL = 1e-9


@dataclass
class SoilParams:
    """Hydraulic parameters of the soil column."""

    ks: float  # saturated hydraulic conductivity [m/s]
    n: float  # van Genuchten shape parameter [-], > 1
    alpha: float  # inverse air-entry suction [1/m]
    w_s: float  # saturated water content (porosity) [m3/m3]
    w_r: float  # residual water content [m3/m3]
    layer_depths: tuple = LAYER_DEPTHS  # [m]

    def __post_init__(self):
        if not (0.0 <= self.w_r < self.w_s <= 1.0):
            raise DomainError(f"need 0 <= w_r < w_s <= 1, got w_r={self.w_r}, w_s={self.w_s}")
        if not self.alpha > 0.0:
            raise DomainError(f"alpha must be > 0, got {self.alpha}")
        if not self.ks > 0.0:
            raise DomainError(f"ks must be > 0, got {self.ks}")
        if not self.n > 1.0:
            raise DomainError(f"n must be > 1, got {self.n}")
        if len(self.layer_depths) != N_LAYERS or any(d <= 0 for d in self.layer_depths):
            raise DomainError(f"expected {N_LAYERS} positive layer depths, got {self.layer_depths}")


def effective_saturation(w: float, soil: SoilParams) -> float:
    """Effective saturation S in [0, 1]; affine in w.

    Values drifting past [w_r, w_s] by at most ``SATURATION_DRIFT_TOL``
    are clamped with a logged warning; larger excursions raise.
    """
    lo, hi = soil.w_r, soil.w_s
    if w < lo - SATURATION_DRIFT_TOL or w > hi + SATURATION_DRIFT_TOL:
        raise DomainError(f"w = {w} outside [{lo}, {hi}]")
    if w < lo or w > hi:
        log.warning("soil moisture %.17g clamped to [%g, %g]", w, lo, hi)
        w = min(max(w, lo), hi)
    return (w - lo) / (hi - lo)


def vg_suction(w: float, soil: SoilParams) -> float:
    """Capillary suction psi(w) [m]; zero at saturation, singular at w_r."""
    s = effective_saturation(w, soil)
    if s <= 0.0:
        raise DomainError(f"suction overflow: w = {w} at or below residual content {soil.w_r}")
    m = 1.0 - 1.0 / soil.n
    return (1.0 / soil.alpha) * (s ** (-1.0 / m) - 1.0) ** (1.0 / soil.n)


def vg_conductivity(w: float, soil: SoilParams) -> float:
    """Unsaturated hydraulic conductivity K(w) [m/s]; 0 at w_r, K_s at w_s."""
    s = effective_saturation(w, soil)
    m = 1.0 - 1.0 / soil.n
    return soil.ks * np.sqrt(s) * (1.0 - (1.0 - s ** (1.0 / m)) ** m) ** 2
