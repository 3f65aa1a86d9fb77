"""Generation/price series: file ingestion and reproducible synthetic scenarios.

Scenario files are plain UTF-8 CSV with the exact header
``slot,generation_mw,price`` and one row per market slot.  Files written by
:func:`save_scenario` round-trip byte-identically through
:func:`load_scenario` / :func:`save_scenario`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ScenarioFormatError, ValidationError

SCENARIO_HEADER = "slot,generation_mw,price"
SCENARIO_FILE_NAME = "scenario.csv"
_COLUMNS = ("slot", "generation_mw", "price")


@dataclass(frozen=True)
class MarketRecord:
    """One market slot: renewable generation output (MW) and clearing price."""

    timestamp_index: int
    generation_mw: float
    price: float

    def __post_init__(self):
        if self.generation_mw < 0:
            raise ValidationError(
                f"generation_mw must be >= 0, got {self.generation_mw}")


@dataclass(frozen=True)
class ScenarioData:
    """An ordered, validated series of market records with one slot duration."""

    records: tuple[MarketRecord, ...]
    slot_duration_h: float

    def __post_init__(self):
        if len(self.records) == 0:
            raise ValidationError("scenario must contain at least one record")
        if not self.slot_duration_h > 0:
            raise ValidationError(
                f"slot_duration_h must be > 0, got {self.slot_duration_h}")
        prev = None
        for rec in self.records:
            if prev is not None and rec.timestamp_index <= prev:
                raise ValidationError(
                    "timestamp_index must be strictly increasing "
                    f"({prev} followed by {rec.timestamp_index})")
            prev = rec.timestamp_index

    def __len__(self) -> int:
        return len(self.records)

    @property
    def generation(self) -> np.ndarray:
        return np.array([r.generation_mw for r in self.records], dtype=float)

    @property
    def prices(self) -> np.ndarray:
        return np.array([r.price for r in self.records], dtype=float)

    def slice(self, start: int, stop: int) -> "ScenarioData":
        """Contiguous sub-series [start, stop) with the same slot duration."""
        if not (0 <= start < stop <= len(self.records)):
            raise ValidationError(
                f"invalid slice [{start}, {stop}) of {len(self.records)} records")
        return ScenarioData(self.records[start:stop], self.slot_duration_h)

    def partition(self, n_parts: int) -> list["ScenarioData"]:
        """Split into n contiguous, near-equal slices (for per-worker data)."""
        if n_parts < 1:
            raise ValidationError(f"n_parts must be >= 1, got {n_parts}")
        if n_parts > len(self.records):
            raise ValidationError(
                f"cannot split {len(self.records)} records into {n_parts} parts")
        edges = np.linspace(0, len(self.records), n_parts + 1).astype(int)
        return [self.slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def load_scenario(path: str | Path, slot_duration_h: float) -> ScenarioData:
    """Read a scenario CSV; errors name the offending data row and column.

    Row numbers are 1-based over data rows (the header is row 0).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioFormatError(f"cannot read file: {exc}", path=str(path))
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ScenarioFormatError("file is empty", path=str(path))
    if lines[0].strip() != SCENARIO_HEADER:
        raise ScenarioFormatError(
            f"expected header '{SCENARIO_HEADER}', got '{lines[0].strip()}'",
            path=str(path), row=0)

    records = []
    for row_no, line in enumerate(lines[1:], start=1):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 3:
            raise ScenarioFormatError(
                f"expected 3 comma-separated fields, got {len(fields)}",
                path=str(path), row=row_no)
        try:
            slot = int(fields[0])
        except ValueError:
            raise ScenarioFormatError(
                f"could not parse integer from '{fields[0]}'",
                path=str(path), row=row_no, column="slot")
        values = []
        for col, field in zip(_COLUMNS[1:], fields[1:]):
            try:
                value = float(field)
            except ValueError:
                raise ScenarioFormatError(
                    f"could not parse number from '{field}'",
                    path=str(path), row=row_no, column=col)
            if not math.isfinite(value):
                raise ScenarioFormatError(
                    f"value must be finite, got '{field}'",
                    path=str(path), row=row_no, column=col)
            values.append(value)
        generation_mw, price = values
        if generation_mw < 0:
            raise ScenarioFormatError(
                f"generation_mw must be >= 0, got {generation_mw}",
                path=str(path), row=row_no, column="generation_mw")
        records.append(MarketRecord(slot, generation_mw, price))
    if not records:
        raise ScenarioFormatError("file contains no data rows", path=str(path))
    return ScenarioData(tuple(records), slot_duration_h)


def save_scenario(scenario: ScenarioData, path: str | Path) -> None:
    """Write the canonical scenario CSV (shortest exact float repr, '\\n' EOL)."""
    lines = [SCENARIO_HEADER]
    for rec in scenario.records:
        lines.append(f"{rec.timestamp_index},{rec.generation_mw!r},{rec.price!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class SyntheticProfile:
    """Knobs for the synthetic generation and price processes.

    Generation is a half-sine daylight bump between ``sunrise_hour`` and
    ``sunset_hour`` scaled to ``peak_generation_mw``, plus Gaussian noise,
    clipped at zero.  Price is a constant mean plus a daily sinusoid peaking
    at ``price_peak_hour``, a sawtooth ramp over each week, and Gaussian
    noise, optionally floored (the floor may be negative, so negative prices
    are exercised).
    """

    peak_generation_mw: float = 0.5
    sunrise_hour: float = 6.0
    sunset_hour: float = 18.0
    generation_noise_mw: float = 0.02
    price_mean: float = 10.0
    price_daily_amplitude: float = 8.0
    price_peak_hour: float = 18.0
    price_weekly_ramp: float = 2.0
    price_noise: float = 1.0
    price_floor: float | None = -5.0
    slots_per_day: int = 24

    def __post_init__(self):
        if self.peak_generation_mw < 0:
            raise ValidationError("peak_generation_mw must be >= 0")
        if not 0 <= self.sunrise_hour < self.sunset_hour <= 24:
            raise ValidationError("need 0 <= sunrise_hour < sunset_hour <= 24")
        if self.slots_per_day < 1:
            raise ValidationError("slots_per_day must be >= 1")
        if self.generation_noise_mw < 0 or self.price_noise < 0:
            raise ValidationError("noise amplitudes must be >= 0")


def synthesize_scenario(seed: int, n_slots: int,
                        profile: SyntheticProfile | None = None,
                        slot_duration_h: float | None = None) -> ScenarioData:
    """Deterministically generate a scenario from (seed, n_slots, profile).

    The same arguments always produce bitwise-identical series.
    """
    if n_slots < 1:
        raise ValidationError(f"n_slots must be >= 1, got {n_slots}")
    profile = profile if profile is not None else SyntheticProfile()
    if slot_duration_h is None:
        slot_duration_h = 24.0 / profile.slots_per_day

    rng = np.random.default_rng(seed)
    t = np.arange(n_slots)
    hour = (t % profile.slots_per_day) * (24.0 / profile.slots_per_day)

    daylight = np.zeros(n_slots)
    span = profile.sunset_hour - profile.sunrise_hour
    up = (hour >= profile.sunrise_hour) & (hour <= profile.sunset_hour)
    daylight[up] = np.sin(np.pi * (hour[up] - profile.sunrise_hour) / span)
    generation = profile.peak_generation_mw * daylight
    generation = generation + profile.generation_noise_mw * rng.standard_normal(n_slots)
    generation = np.maximum(generation, 0.0)

    week = 7 * profile.slots_per_day
    phase = 2.0 * np.pi * (hour - profile.price_peak_hour) / 24.0
    price = (profile.price_mean
             + profile.price_daily_amplitude * np.cos(phase)
             + profile.price_weekly_ramp * (2.0 * ((t % week) / week) - 1.0)
             + profile.price_noise * rng.standard_normal(n_slots))
    if profile.price_floor is not None:
        price = np.maximum(price, profile.price_floor)

    records = tuple(
        MarketRecord(int(i), float(g), float(p))
        for i, g, p in zip(t, generation, price))
    return ScenarioData(records, slot_duration_h)
