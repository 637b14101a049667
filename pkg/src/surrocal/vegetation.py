"""Parameters of the 3-pool vegetation carbon balance."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError

# Carbon molar mass [kg/mol]: converts NPP from mol m-2 s-1 to kg m-2 s-1.
KG_C_PER_MOL = 0.012

# Small leaf-area floor so regrowth can start from a bare state.
LAI_SEED = 0.05


@dataclass
class VegParams:
    """Vegetation constants plus the two calibrated parameters."""

    vmax0: float  # maximum Rubisco capacity [mol m-2 s-1]
    es: float  # minimum (stem+root)/leaf carbon ratio [-]
    sl: float  # specific leaf area [m2/kg]
    a_leaf: float  # carbon allocation fractions [-], sum to 1
    a_stem: float
    a_root: float
    d_leaf: float  # normal turnover rates [1/s]
    d_stem: float
    d_root: float
    k_ext: float  # canopy light-extinction coefficient [-]
    w_wilt: float  # wilting point [m3/m3]
    w_fc: float  # field capacity [m3/m3]
    swrad_ref: float  # radiation scale for the light response [W/m2]

    def __post_init__(self):
        fracs = (self.a_leaf, self.a_stem, self.a_root)
        if any(not (0.0 <= a <= 1.0) for a in fracs):
            raise DomainError(f"allocation fractions must lie in [0, 1], got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-12:
            raise DomainError(f"allocation fractions must sum to 1, got {sum(fracs)}")
        if any(d < 0.0 for d in (self.d_leaf, self.d_stem, self.d_root)):
            raise DomainError("turnover rates must be >= 0")
        if not (0.0 < self.w_wilt < self.w_fc):
            raise DomainError(f"need 0 < w_wilt < w_fc, got {self.w_wilt}, {self.w_fc}")
        if self.vmax0 <= 0.0 or self.es <= 0.0 or self.sl <= 0.0:
            raise DomainError("vmax0, es and sl must be strictly positive")
        if self.k_ext <= 0.0 or self.swrad_ref <= 0.0:
            raise DomainError("k_ext and swrad_ref must be strictly positive")


def water_stress(w_root: float, veg: VegParams) -> float:
    """Root-zone water stress factor in [0, 1] (0 at wilting, 1 at field capacity)."""
    f = (w_root - veg.w_wilt) / (veg.w_fc - veg.w_wilt)
    return min(max(f, 0.0), 1.0)
