"""Scenario presets: fixed model constants tuned once per climate setting.

Three presets ship with the package, spanning a moderately vegetated
site (site1, about 1190 mm/yr), a densely vegetated site (site2, about
1590 mm/yr) and an arid site (site3, about 110 mm/yr). Each preset
carries the forcing climatology, the fixed soil/vegetation constants,
the four calibrated-parameter defaults and the radiative-transfer
channel constants. Presets are stored as plain key=value text files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

from .errors import DomainError, ParseError
from ._kv import read_kv_file, write_kv_file
from .params import ParamRanges, PhysicalParams
from .rtm import CHANNEL_LABELS, ChannelParams
from .soil import LAYER_DEPTHS, SoilParams
from .vegetation import VegParams

SCENARIO_NAMES = ("site1", "site2", "site3")

# Channel constants are stored per label with these suffixes.
_CHANNEL_FIELDS = ("omega", "b_veg", "e_dry", "s_m")


@dataclass
class ScenarioPreset:
    name: str
    # forcing climatology
    annual_precip_mm: float
    wet_center_doy: float
    wet_width_days: float
    storm_mean_mm: float
    storm_prob_peak: float
    temp_mean_K: float
    temp_seasonal_K: float
    temp_diurnal_K: float
    swrad_peak_Wm2: float
    pet_peak_m_s: float
    # fixed soil constants
    alpha_per_m: float
    w_s: float
    w_r: float
    psi_dry_m: float  # suction shutting off bare-soil evaporation
    inf_cap_factor: float  # infiltration capacity as a multiple of ks
    # fixed vegetation constants
    sl: float
    a_leaf: float
    a_stem: float
    a_root: float
    d_leaf: float
    d_stem: float
    d_root: float
    k_ext: float
    w_wilt: float
    w_fc: float
    swrad_ref_Wm2: float
    # calibrated-parameter defaults
    ks_def: float
    n_def: float
    vmax0_def: float
    es_def: float
    # radiative transfer
    inc_angle_deg: float
    channels: tuple  # tuple[ChannelParams, ...]

    def __post_init__(self):
        if not (0.0 < self.w_wilt < self.w_fc < self.w_s):
            raise DomainError(
                f"need 0 < w_wilt < w_fc < w_s, got {self.w_wilt}, {self.w_fc}, {self.w_s}"
            )
        if self.psi_dry_m <= 0.0:
            raise DomainError("psi_dry_m must be strictly positive")
        for ch in self.channels:
            if ch.e_dry - ch.s_m * self.w_s <= 0.0:
                raise DomainError(f"channel {ch.label}: emissivity non-positive at saturation")

    def ranges(self) -> ParamRanges:
        return ParamRanges(
            ks_def=self.ks_def, n_def=self.n_def, vmax0_def=self.vmax0_def, es_def=self.es_def
        )

    def soil_params(self, physical: PhysicalParams) -> SoilParams:
        return SoilParams(
            ks=physical.ks,
            n=physical.n,
            alpha=self.alpha_per_m,
            w_s=self.w_s,
            w_r=self.w_r,
            layer_depths=LAYER_DEPTHS,
        )

    def veg_params(self, physical: PhysicalParams) -> VegParams:
        return VegParams(
            vmax0=physical.vmax0,
            es=physical.es,
            sl=self.sl,
            a_leaf=self.a_leaf,
            a_stem=self.a_stem,
            a_root=self.a_root,
            d_leaf=self.d_leaf,
            d_stem=self.d_stem,
            d_root=self.d_root,
            k_ext=self.k_ext,
            w_wilt=self.w_wilt,
            w_fc=self.w_fc,
            swrad_ref=self.swrad_ref_Wm2,
        )


def _scalar_field_names() -> list:
    return [f.name for f in fields(ScenarioPreset) if f.name not in ("name", "channels")]


def save_preset(preset: ScenarioPreset, path) -> None:
    items = [("name", preset.name)]
    items += [(name, "%.17g" % getattr(preset, name)) for name in _scalar_field_names()]
    for ch in preset.channels:
        for fname in _CHANNEL_FIELDS:
            items.append((f"tb{ch.label}_{fname}", "%.17g" % getattr(ch, fname)))
    write_kv_file(path, items, comment=f"scenario preset: {preset.name}")


def load_preset_file(path) -> ScenarioPreset:
    path = Path(path)
    values, lines = read_kv_file(path)
    if "name" not in values:
        raise ParseError("missing key 'name'", path=str(path))
    name = values.pop("name")

    def take(key: str) -> float:
        if key not in values:
            raise ParseError(f"missing key {key!r}", path=str(path))
        raw = values.pop(key)
        try:
            return float(raw)
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r}: {raw!r}", path=str(path), line=lines[key]) from exc

    scalars = {fname: take(fname) for fname in _scalar_field_names()}
    inc = math.radians(scalars["inc_angle_deg"])
    channels = []
    for label in CHANNEL_LABELS:
        kwargs = {fname: take(f"tb{label}_{fname}") for fname in _CHANNEL_FIELDS}
        channels.append(ChannelParams(label=label, inc_angle=inc, **kwargs))
    if values:
        key = next(iter(values))
        raise ParseError(f"unknown key {key!r}", path=str(path), line=lines[key])
    return ScenarioPreset(name=name, channels=tuple(channels), **scalars)


def load_preset(scenario: str) -> ScenarioPreset:
    """Load one of the packaged presets by scenario name."""
    if scenario not in SCENARIO_NAMES:
        raise DomainError(f"unknown scenario {scenario!r}; expected one of {SCENARIO_NAMES}")
    ref = resources.files("surrocal").joinpath(f"data/{scenario}.preset")
    with resources.as_file(ref) as path:
        return load_preset_file(path)
