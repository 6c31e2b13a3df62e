"""Ambient temperature profiles driving the harvester."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, OutOfDomainError

KINDS = ("triangle", "sine", "table")


@dataclass(frozen=True)
class ThermalProfile:
    """Triangle, sine or tabulated temperature history.

    Triangle and sine start at ``t_min`` at ``t = -phase`` and peak half a
    period later.  Table profiles interpolate linearly between samples.
    """

    kind: str = "triangle"
    t_min: float = 40.0
    t_max: float = 50.0
    rate: float | None = 0.1
    period: float | None = None
    phase: float = 0.0
    table_times: tuple | None = None
    table_temps: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"profile kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "table":
            if self.table_times is None or self.table_temps is None:
                raise InvalidInputError("table profile needs table_times and table_temps")
            ts = np.asarray(self.table_times, float)
            temps = np.asarray(self.table_temps, float)
            if ts.ndim != 1 or ts.shape != temps.shape or ts.size < 2:
                raise InvalidInputError("table profile needs two equally long columns of >= 2 samples")
            if np.any(np.diff(ts) <= 0):
                raise InvalidInputError("table profile times must be strictly increasing")
            object.__setattr__(self, "table_times", tuple(float(v) for v in ts))
            object.__setattr__(self, "table_temps", tuple(float(v) for v in temps))
            object.__setattr__(self, "t_min", float(temps.min()))
            object.__setattr__(self, "t_max", float(temps.max()))
            return
        if not (self.t_min < self.t_max):
            raise InvalidInputError(f"t_min must be < t_max ({self.t_min} >= {self.t_max})")
        if self.kind == "triangle" and not (self.rate is not None and self.rate > 0):
            raise InvalidInputError("triangle profile needs rate > 0")
        if self.kind == "sine" and not (self.period is not None and self.period > 0):
            raise InvalidInputError("sine profile needs period > 0")

    @property
    def cycle_period(self) -> float:
        """Length of one thermal cycle (the whole record for table profiles)."""
        if self.kind == "triangle":
            return 2.0 * (self.t_max - self.t_min) / self.rate
        if self.kind == "sine":
            return float(self.period)
        return self.table_times[-1] - self.table_times[0]

    @classmethod
    def from_csv(cls, path) -> "ThermalProfile":
        """Two numeric columns (seconds, deg C); a non-numeric first row is taken as a header."""
        rows = []
        with Path(path).open(newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row or not "".join(row).strip():
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if i == 0:
                        continue
                    raise InvalidInputError(f"{path}:{i + 1}: expected two numeric columns")
        if not rows:
            raise InvalidInputError(f"{path}: no samples")
        ts, temps = zip(*rows)
        return cls(kind="table", table_times=ts, table_temps=temps)


def temperature_at(profile: ThermalProfile, t):
    ts = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(ts)):
        raise InvalidInputError("time must be finite")
    if profile.kind == "table":
        tt = profile.table_times
        if np.any(ts < tt[0]) or np.any(ts > tt[-1]):
            raise OutOfDomainError(f"time outside table range [{tt[0]}, {tt[-1]}]")
        out = np.interp(ts, tt, profile.table_temps)
    else:
        if np.any(ts < 0):
            raise InvalidInputError("time must be >= 0")
        p = profile.cycle_period
        tau = np.mod(ts + profile.phase, p)
        span = profile.t_max - profile.t_min
        if profile.kind == "triangle":
            up = tau < p / 2
            out = np.where(up, profile.t_min + profile.rate * tau, profile.t_max - profile.rate * (tau - p / 2))
        else:
            out = profile.t_min + 0.5 * span * (1.0 - np.cos(2.0 * math.pi * tau / p))
        out = np.clip(out, profile.t_min, profile.t_max)
    return float(out) if out.ndim == 0 else out
