"""Deterministic forward model: 3-layer soil column plus carbon pools.

One hour advances both subsystems from a common start-of-hour state:
water-extraction demands (transpiration, suction-limited bare-soil
evaporation) are derived from the state, the soil column is updated with
those demands, and the carbon pools are updated with the same water
stress factor. ``simulate`` runs the whole study period after a number
of spin-up repetitions of the same forcing and records hourly states and
water fluxes of the final pass only.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernel
from .errors import DomainError, NumericalError
from .forcing import HOURS_PER_DAY, HOURS_PER_YEAR, ForcingRecord, ForcingSeries
from .params import PhysicalParams
from .soil import ROOT_FRACTIONS, SoilParams
from .vegetation import VegParams, water_stress

DT_SECONDS = 3600.0
DEFAULT_SPINUP_CYCLES = 4

# Fixed initial condition; spin-up carries the state to the attractor.
# The leaf pool starts small so the support constraint holds for every
# reachable value of the pool-ratio parameter.
INITIAL_SATURATION = 0.35
INITIAL_CARBON = (0.005, 0.05, 0.05)  # leaf, stem, root [kg/m2]

FLUX_NAMES = ("infiltration", "runoff", "drainage", "transpiration", "soil_evaporation")


@dataclass
class ModelState:
    """Prognostic state of the column at one instant."""

    w: np.ndarray  # volumetric soil moisture per layer [m3/m3]
    c_leaf: float  # [kg/m2]
    c_stem: float  # [kg/m2]
    c_root: float  # [kg/m2]
    lai: float  # [m2/m2], equals sl * c_leaf
    t_surf: float  # surface temperature [K], taken from forcing

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if self.w.shape != (3,):
            raise DomainError(f"w must have shape (3,), got {self.w.shape}")
        if min(self.c_leaf, self.c_stem, self.c_root) < 0.0:
            raise DomainError("carbon pools must be non-negative")

    def rootzone_moisture(self) -> float:
        """Root-fraction weighted soil moisture [m3/m3]."""
        return float(np.dot(ROOT_FRACTIONS, self.w))


@dataclass(frozen=True)
class SoilFluxes:
    """Water moved during one soil step, all in meters."""

    infiltration: float
    runoff: float
    drainage: float
    transpiration: float
    soil_evaporation: float


@dataclass
class Trajectory:
    """Hourly record of the final (post-spin-up) pass."""

    w: np.ndarray  # (T, 3) [m3/m3]
    c: np.ndarray  # (T, 3) leaf/stem/root [kg/m2]
    lai: np.ndarray  # (T,)
    t_surf: np.ndarray  # (T,) [K]
    fluxes: np.ndarray  # (T, 5) [m per hour], columns FLUX_NAMES
    w_start: np.ndarray  # (3,) soil state at the start of the recorded pass
    layer_depths: tuple

    @property
    def n_hours(self) -> int:
        return len(self.lai)

    @property
    def surface_sm(self) -> np.ndarray:
        return self.w[:, 0]

    @property
    def rootzone_sm(self) -> np.ndarray:
        """Deepest-layer soil moisture, the sub-surface diagnostic."""
        return self.w[:, 2]

    def storage(self) -> np.ndarray:
        """Column water storage [m] at the end of every hour."""
        return self.w @ np.asarray(self.layer_depths)

    def daily_mean(self, series: np.ndarray) -> np.ndarray:
        n_days = self.n_hours // HOURS_PER_DAY
        return np.asarray(series)[: n_days * HOURS_PER_DAY].reshape(n_days, HOURS_PER_DAY).mean(axis=1)

    def water_balance_residuals(self) -> np.ndarray:
        """Per-year |d(storage) - (infiltration - outfluxes)| [m]."""
        years = self.n_hours // HOURS_PER_YEAR
        depths = np.asarray(self.layer_depths)
        storage = self.storage()
        res = np.empty(years)
        for y in range(years):
            lo, hi = y * HOURS_PER_YEAR, (y + 1) * HOURS_PER_YEAR
            start = float(self.w_start @ depths) if y == 0 else storage[lo - 1]
            fx = self.fluxes[lo:hi]
            net_in = fx[:, 0].sum() - fx[:, 2].sum() - fx[:, 3].sum() - fx[:, 4].sum()
            res[y] = abs((storage[hi - 1] - start) - net_in)
        return res


def initial_state(soil: SoilParams, veg: VegParams, t_surf: float = 300.0) -> ModelState:
    w0 = soil.w_r + INITIAL_SATURATION * (soil.w_s - soil.w_r)
    cl, cs, cr = INITIAL_CARBON
    return ModelState(
        w=np.full(3, w0), c_leaf=cl, c_stem=cs, c_root=cr, lai=veg.sl * cl, t_surf=t_surf
    )


def transpiration_demand(state: ModelState, record: ForcingRecord, veg: VegParams) -> float:
    """Canopy transpiration demand [m/s] from the start-of-hour state."""
    canopy = 1.0 - np.exp(-veg.k_ext * state.lai)
    return record.pet * canopy * water_stress(state.rootzone_moisture(), veg)


def soil_evaporation_demand(
    state: ModelState, record: ForcingRecord, soil: SoilParams, veg: VegParams, psi_dry: float
) -> float:
    """Bare-soil evaporation demand [m/s], shut off as suction nears psi_dry."""
    canopy = 1.0 - np.exp(-veg.k_ext * state.lai)
    s0 = _kernel._saturation(state.w[0], soil.w_s, soil.w_r)
    if s0 <= 0.0:
        beta = 0.0
    else:
        psi0 = _kernel.vg_psi(max(s0, _kernel.PSI_S_FLOOR), soil.alpha, soil.n)
        beta = min(max(1.0 - psi0 / psi_dry, 0.0), 1.0)
    return record.pet * (1.0 - canopy) * beta


def step_soil(
    state: ModelState,
    record: ForcingRecord,
    soil: SoilParams,
    dt: float = DT_SECONDS,
    transpiration: float = 0.0,
    soil_evaporation: float = 0.0,
    infiltration_capacity: float | None = None,
) -> tuple:
    """Advance the soil column one step; returns (new_state, SoilFluxes).

    ``transpiration`` and ``soil_evaporation`` are extraction demands in
    m/s computed by the caller; extraction is root-fraction weighted and
    limited so no layer leaves [w_r, w_s]. The infiltration capacity
    defaults to the saturated conductivity.
    """
    w = state.w.copy()
    out = _kernel.soil_step(
        w,
        record.precip,
        transpiration,
        soil_evaporation,
        soil.ks,
        soil.n,
        soil.alpha,
        soil.w_s,
        soil.w_r,
        soil.layer_depths[0],
        soil.layer_depths[1],
        soil.layer_depths[2],
        dt,
        soil.ks if infiltration_capacity is None else infiltration_capacity,
    )
    for i in range(3):
        if not np.isfinite(w[i]):
            raise NumericalError(f"non-finite soil moisture in layer {i}")
    fluxes = SoilFluxes(*out)
    if not all(np.isfinite(v) for v in out):
        raise NumericalError(f"non-finite soil flux: {fluxes}")
    new = replace(state, w=w, t_surf=record.temp)
    return new, fluxes


def step_vegetation(
    state: ModelState, record: ForcingRecord, veg: VegParams, dt: float = DT_SECONDS
) -> ModelState:
    """Advance the carbon pools one step from the start-of-hour state."""
    c = np.array([state.c_leaf, state.c_stem, state.c_root])
    fw = water_stress(state.rootzone_moisture(), veg)
    _kernel.veg_step(
        c,
        record.swrad,
        fw,
        veg.vmax0,
        veg.es,
        veg.sl,
        veg.a_leaf,
        veg.a_stem,
        veg.a_root,
        veg.d_leaf,
        veg.d_stem,
        veg.d_root,
        veg.k_ext,
        veg.swrad_ref,
        dt,
    )
    return replace(
        state,
        c_leaf=float(c[0]),
        c_stem=float(c[1]),
        c_root=float(c[2]),
        lai=veg.sl * float(c[0]),
        t_surf=record.temp,
    )


def _pack_kernel_params(
    soil: SoilParams, veg: VegParams, psi_dry: float, inf_cap_factor: float
) -> np.ndarray:
    return np.array(
        [
            soil.ks,
            soil.n,
            soil.alpha,
            soil.w_s,
            soil.w_r,
            soil.layer_depths[0],
            soil.layer_depths[1],
            soil.layer_depths[2],
            psi_dry,
            veg.vmax0,
            veg.es,
            veg.sl,
            veg.a_leaf,
            veg.a_stem,
            veg.a_root,
            veg.d_leaf,
            veg.d_stem,
            veg.d_root,
            veg.k_ext,
            veg.w_wilt,
            veg.w_fc,
            veg.swrad_ref,
            inf_cap_factor,
        ]
    )


def simulate(
    params: PhysicalParams,
    forcing: ForcingSeries,
    preset,
    spinup_cycles: int = DEFAULT_SPINUP_CYCLES,
) -> Trajectory:
    """Run the forward model; returns the post-spin-up hourly trajectory.

    The same forcing block is integrated ``spinup_cycles`` times to carry
    the state onto its attractor, then once more with recording. Pure in
    (params, forcing, preset, spinup_cycles): identical inputs give
    bit-identical trajectories.
    """
    if spinup_cycles < 0:
        raise DomainError(f"spinup_cycles must be >= 0, got {spinup_cycles}")
    soil = preset.soil_params(params)
    veg = preset.veg_params(params)
    start = initial_state(soil, veg)
    par = _pack_kernel_params(soil, veg, preset.psi_dry_m, preset.inf_cap_factor)
    w_traj, c_traj, lai_traj, flux_traj, w_start = _kernel.integrate(
        start.w,
        np.array([start.c_leaf, start.c_stem, start.c_root]),
        forcing.precip,
        forcing.swrad,
        forcing.pet,
        par,
        spinup_cycles,
        DT_SECONDS,
    )
    for name, arr in (("state", w_traj), ("carbon", c_traj), ("flux", flux_traj)):
        if not np.all(np.isfinite(arr)):
            t_bad = int(np.argwhere(~np.isfinite(arr))[0][0])
            raise NumericalError(f"non-finite {name} value at hour {t_bad}")
    return Trajectory(
        w=w_traj,
        c=c_traj,
        lai=lai_traj,
        t_surf=forcing.temp.copy(),
        fluxes=flux_traj,
        w_start=w_start,
        layer_depths=soil.layer_depths,
    )
