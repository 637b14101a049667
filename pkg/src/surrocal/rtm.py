"""Tau-omega microwave observation operator.

Maps model state to brightness temperature at four channels
(6.9 / 10.65 GHz, H and V polarization). Vegetation optical depth is
proportional to leaf area index, and soil emissivity declines linearly
with surface soil moisture:

    tau    = b_veg * LAI
    Gamma  = exp(-tau / cos(inc_angle))
    e_soil = e_dry - s_m * w_surface
    TB     = t_surf * [e_soil * Gamma
                       + (1 - omega) * (1 - Gamma) * (1 + (1 - e_soil) * Gamma)]

At LAI = 0 this reduces to the bare-soil limit TB = t_surf * e_soil; under
a dense canopy TB saturates at t_surf * (1 - omega) and loses all surface
soil moisture sensitivity. None of the channel constants are calibrated.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AlignmentError, DomainError, NumericalError, ParseError

TB_MIN_K = 100.0
TB_MAX_K = 340.0

CHANNEL_LABELS = ("069H", "069V", "107H", "107V")

OBS_SPACING_HOURS = 48  # satellite revisit, approximately 2-daily
OBS_OFFSET_HOURS = 2  # night overpass


@dataclass(frozen=True)
class ChannelParams:
    """Constants of one frequency/polarization channel."""

    label: str
    omega: float  # single-scattering albedo [-]
    b_veg: float  # vegetation opacity per unit LAI [-]
    e_dry: float  # dry-soil emissivity [-]
    s_m: float  # emissivity sensitivity to surface moisture [(m3/m3)^-1]
    inc_angle: float  # incidence angle [rad]

    def __post_init__(self):
        if not (0.0 <= self.omega <= 0.2):
            raise DomainError(f"omega must lie in [0, 0.2], got {self.omega}")
        if not (0.0 < self.e_dry <= 1.0):
            raise DomainError(f"e_dry must lie in (0, 1], got {self.e_dry}")
        if self.s_m < 0.0:
            raise DomainError(f"s_m must be >= 0, got {self.s_m}")
        if self.b_veg < 0.0:
            raise DomainError(f"b_veg must be >= 0, got {self.b_veg}")
        if not (0.0 <= self.inc_angle < np.pi / 2):
            raise DomainError(f"inc_angle must lie in [0, pi/2), got {self.inc_angle}")


@dataclass
class ObservationSeries:
    """Brightness temperatures at a set of hours, one column per channel."""

    times_h: np.ndarray  # hour indices into the trajectory
    tb: np.ndarray  # [K], shape (n_times, n_channels)
    channel_labels: tuple
    noise_sd: float = 0.0  # [K] noise used at generation

    def __post_init__(self):
        self.times_h = np.asarray(self.times_h, dtype=np.int64)
        self.tb = np.asarray(self.tb, dtype=float)
        if self.tb.shape != (len(self.times_h), len(self.channel_labels)):
            raise DomainError(f"tb shape {self.tb.shape} inconsistent with times/channels")
        if len(self.times_h) == 0:
            raise DomainError("observation series is empty")
        if np.any(np.diff(self.times_h) <= 0):
            raise DomainError("timestamps must be strictly increasing")
        if np.any(self.tb <= TB_MIN_K) or np.any(self.tb >= TB_MAX_K):
            raise DomainError(f"brightness temperatures outside ({TB_MIN_K}, {TB_MAX_K}) K")

    @property
    def n_times(self) -> int:
        return len(self.times_h)

    def to_csv(self, path) -> None:
        header = "hour," + ",".join(f"tb_{lab}_K" for lab in self.channel_labels)
        with open(path, "w", newline="\n") as fh:
            fh.write(header + "\n")
            for t, row in zip(self.times_h, self.tb):
                fh.write("%d,%s\n" % (t, ",".join("%.17g" % v for v in row)))

    @classmethod
    def from_csv(cls, path, noise_sd: float = 0.0) -> "ObservationSeries":
        path = Path(path)
        with open(path) as fh:
            lines = fh.read().splitlines()
        if not lines:
            raise ParseError("empty observation file", path=str(path))
        header = lines[0].split(",")
        if header[0] != "hour" or len(header) < 2:
            raise ParseError(f"unexpected header {lines[0]!r}", path=str(path), line=1)
        labels = []
        for h in header[1:]:
            if not (h.startswith("tb_") and h.endswith("_K")):
                raise ParseError(f"unexpected column {h!r}", path=str(path), line=1)
            labels.append(h[3:-2])
        times, rows = [], []
        for i, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            if len(parts) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(parts)}", path=str(path), line=i)
            try:
                times.append(int(parts[0]))
                rows.append([float(p) for p in parts[1:]])
            except ValueError as exc:
                raise ParseError(str(exc), path=str(path), line=i) from exc
        return cls(np.array(times), np.array(rows), tuple(labels), noise_sd=noise_sd)


def _tb_arrays(t_surf, w_surface, lai, channel: ChannelParams):
    """Vectorized brightness temperature for aligned arrays/scalars."""
    tau = channel.b_veg * np.asarray(lai, dtype=float)
    gamma = np.exp(-tau / np.cos(channel.inc_angle))
    e_soil = channel.e_dry - channel.s_m * np.asarray(w_surface, dtype=float)
    return np.asarray(t_surf, dtype=float) * (
        e_soil * gamma
        + (1.0 - channel.omega) * (1.0 - gamma) * (1.0 + (1.0 - e_soil) * gamma)
    )


def brightness_temperature(state, channel: ChannelParams) -> float:
    """Brightness temperature [K] of one model state at one channel."""
    for name, value in (("t_surf", state.t_surf), ("w", state.w[0]), ("lai", state.lai)):
        if not np.isfinite(value):
            raise NumericalError(f"non-finite {name} in model state: {value}")
    return float(_tb_arrays(state.t_surf, state.w[0], state.lai, channel))


def default_observation_times(n_hours: int) -> np.ndarray:
    """Hour indices of the synthetic satellite overpasses."""
    return np.arange(OBS_OFFSET_HOURS, n_hours, OBS_SPACING_HOURS, dtype=np.int64)


def observe(trajectory, times_h, channels, noise_sd: float = 0.0,
            rng: np.random.Generator | None = None) -> ObservationSeries:
    """Sample brightness temperatures from a trajectory at given hours.

    ``noise_sd`` > 0 adds i.i.d. Gaussian observation noise, in which case
    ``rng`` must be provided; ``noise_sd`` = 0 is exactly noiseless.
    """
    times = np.asarray(times_h, dtype=np.int64)
    n = trajectory.n_hours
    if np.any(times < 0) or np.any(times >= n):
        bad = times[(times < 0) | (times >= n)][0]
        raise AlignmentError(f"observation hour {bad} outside trajectory [0, {n})")
    t_surf = trajectory.t_surf[times]
    w_surf = trajectory.w[times, 0]
    lai = trajectory.lai[times]
    tb = np.column_stack([_tb_arrays(t_surf, w_surf, lai, ch) for ch in channels])
    if noise_sd > 0.0:
        if rng is None:
            raise DomainError("rng is required when noise_sd > 0")
        tb = tb + rng.normal(0.0, noise_sd, size=tb.shape)
    labels = tuple(ch.label for ch in channels)
    return ObservationSeries(times_h=times, tb=tb, channel_labels=labels, noise_sd=noise_sd)
