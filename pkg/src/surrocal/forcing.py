"""Synthetic hourly meteorological forcing.

Temperature and shortwave radiation follow fixed seasonal/diurnal
sinusoids; precipitation is a seeded stochastic storm process confined
to a Gaussian wet-season envelope, rescaled so every year hits the
scenario's annual total. Potential evaporation scales with radiation.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError

HOURS_PER_YEAR = 8760  # 365-day years, no leap days
HOURS_PER_DAY = 24
DAYS_PER_YEAR = 365

TEMP_PEAK_DOY = 120  # hottest day (pre-monsoon)
TEMP_DIURNAL_PEAK_HOUR = 14
SWRAD_PEAK_DOY = 172  # near solstice
SWRAD_SEASONAL_FRACTION = 0.12

FORCING_CSV_HEADER = "hour,precip_m_s,temp_K,swrad_Wm2,pet_m_s"


@dataclass(frozen=True)
class ForcingRecord:
    """One hour of forcing."""

    precip: float  # [m/s]
    temp: float  # [K]
    swrad: float  # [W/m2]
    pet: float  # potential evaporation [m/s]


@dataclass
class ForcingSeries:
    """Hourly forcing arrays covering a whole number of years."""

    precip: np.ndarray  # [m/s]
    temp: np.ndarray  # [K]
    swrad: np.ndarray  # [W/m2]
    pet: np.ndarray  # [m/s]

    def __post_init__(self):
        n = len(self.precip)
        for name in ("temp", "swrad", "pet"):
            if len(getattr(self, name)) != n:
                raise DomainError("forcing arrays must share one length")
        if n == 0 or n % HOURS_PER_YEAR != 0:
            raise DomainError(f"series length {n} is not a whole number of years")
        if np.any(self.precip < 0.0):
            raise DomainError("precipitation must be non-negative")
        if np.any(self.temp < 200.0) or np.any(self.temp > 330.0):
            raise DomainError("temperature outside the plausible [200, 330] K band")

    @property
    def n_hours(self) -> int:
        return len(self.precip)

    @property
    def years(self) -> int:
        return self.n_hours // HOURS_PER_YEAR

    def record(self, t: int) -> ForcingRecord:
        return ForcingRecord(
            precip=float(self.precip[t]),
            temp=float(self.temp[t]),
            swrad=float(self.swrad[t]),
            pet=float(self.pet[t]),
        )

    def annual_precip_mm(self) -> np.ndarray:
        """Total precipitation per year [mm]."""
        per_year = self.precip.reshape(self.years, HOURS_PER_YEAR)
        return per_year.sum(axis=1) * 3600.0 * 1000.0

    def to_csv(self, path) -> None:
        rows = np.column_stack(
            [np.arange(self.n_hours, dtype=float), self.precip, self.temp, self.swrad, self.pet]
        )
        with open(path, "w", newline="\n") as fh:
            fh.write(FORCING_CSV_HEADER + "\n")
            for r in rows:
                fh.write("%d,%.17g,%.17g,%.17g,%.17g\n" % (int(r[0]), r[1], r[2], r[3], r[4]))

    @classmethod
    def from_csv(cls, path) -> "ForcingSeries":
        path = Path(path)
        with open(path) as fh:
            lines = fh.read().splitlines()
        if not lines:
            raise ParseError("empty forcing file", path=str(path))
        if lines[0] != FORCING_CSV_HEADER:
            raise ParseError(f"unexpected header {lines[0]!r}", path=str(path), line=1)
        cols = ([], [], [], [])
        for i, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            if len(parts) != 5:
                raise ParseError(f"expected 5 fields, got {len(parts)}", path=str(path), line=i)
            try:
                for c, p in zip(cols, parts[1:]):
                    c.append(float(p))
            except ValueError as exc:
                raise ParseError(str(exc), path=str(path), line=i) from exc
        return cls(*(np.array(c) for c in cols))


def generate_forcing(preset, years: int, seed: int) -> ForcingSeries:
    """Build a seeded forcing series for a scenario preset.

    Every year's precipitation total is rescaled to the preset target, so
    realized annual sums land exactly on it while the storm pattern stays
    stochastic. Deterministic per (preset, years, seed).
    """
    if years < 1:
        raise DomainError(f"years must be >= 1, got {years}")
    n = years * HOURS_PER_YEAR
    hours = np.arange(n)
    doy = (hours // HOURS_PER_DAY) % DAYS_PER_YEAR
    hod = hours % HOURS_PER_DAY

    temp = (
        preset.temp_mean_K
        + preset.temp_seasonal_K * np.cos(2.0 * np.pi * (doy - TEMP_PEAK_DOY) / DAYS_PER_YEAR)
        + preset.temp_diurnal_K * np.cos(2.0 * np.pi * (hod - TEMP_DIURNAL_PEAK_HOUR) / HOURS_PER_DAY)
    )

    diurnal = np.sin(np.pi * (hod - 6.0) / 12.0)
    diurnal[diurnal < 0.0] = 0.0
    seasonal = 1.0 - SWRAD_SEASONAL_FRACTION * np.cos(
        2.0 * np.pi * (doy - SWRAD_PEAK_DOY) / DAYS_PER_YEAR
    )
    swrad = preset.swrad_peak_Wm2 * seasonal * diurnal
    pet = preset.pet_peak_m_s * swrad / preset.swrad_peak_Wm2

    rng = np.random.default_rng(seed)
    envelope = np.exp(-0.5 * ((doy - preset.wet_center_doy) / preset.wet_width_days) ** 2)
    storm = rng.random(n) < preset.storm_prob_peak * envelope
    depth_mm = rng.exponential(preset.storm_mean_mm, n) * storm

    target_m = preset.annual_precip_mm / 1000.0
    per_year = depth_mm.reshape(years, HOURS_PER_YEAR) / 1000.0  # [m] per hour slot
    for y in range(years):
        total = per_year[y].sum()
        if total <= 0.0:
            # degenerate draw: place the whole annual total at the wet-season peak
            t_peak = int(preset.wet_center_doy) * HOURS_PER_DAY + 12
            per_year[y, t_peak % HOURS_PER_YEAR] = target_m
        else:
            per_year[y] *= target_m / total
    precip = per_year.reshape(n) / 3600.0  # [m/s] over the hour

    return ForcingSeries(precip=precip, temp=temp, swrad=swrad, pet=pet)
