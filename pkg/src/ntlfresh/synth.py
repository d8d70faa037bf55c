"""Planted synthetic consumption data: a seasonal sinusoid per customer and a
multiplicative level drop from a random onset month for NTL customers."""
from __future__ import annotations

import calendar
import datetime as dt
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import NtlError
from .rng import derive_seed, make_generator


class InvalidConfig(NtlError, ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    n_customers: int = 2000
    n_months: int = 24
    ntl_fraction: float = 0.25
    base_level: float = 300.0
    seasonal_amplitude: float = 60.0
    noise_std: float = 15.0
    fraud_drop_fraction: float = 0.4
    fraud_onset_range: tuple[int, int] | None = None  # default: (12, n_months - 1)
    seed: int = 0
    start: str = "2015-01"

    def __post_init__(self):
        if self.n_customers < 1 or self.n_months < 2:
            raise InvalidConfig("n_customers >= 1 and n_months >= 2 required")
        if not 0.0 < self.ntl_fraction < 1.0:
            raise InvalidConfig("ntl_fraction must lie in (0, 1)")
        if not 0.0 <= self.fraud_drop_fraction < 1.0:
            raise InvalidConfig("fraud_drop_fraction must lie in [0, 1)")
        if self.base_level <= 0 or self.seasonal_amplitude < 0 or self.noise_std < 0:
            raise InvalidConfig("base_level > 0, amplitude >= 0 and noise_std >= 0 required")
        lo, hi = self.onset_range
        if not 1 <= lo <= hi <= self.n_months - 1:
            raise InvalidConfig(f"fraud_onset_range {self.onset_range} must lie in "
                                f"[1, {self.n_months - 1}]")
        try:
            year, month = (int(p) for p in self.start.split("-"))
            dt.date(year, month, 1)
        except ValueError:
            raise InvalidConfig(f"start must be YYYY-MM, got {self.start!r}") from None

    @property
    def onset_range(self) -> tuple[int, int]:
        if self.fraud_onset_range is None:
            return (min(12, self.n_months - 1), self.n_months - 1)
        return tuple(self.fraud_onset_range)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fraud_onset_range"] = list(self.onset_range)
        return d


@dataclass
class SynthData:
    consumptions_csv: str
    inspections_csv: str
    truth_csv: str
    labels: dict[str, int]


def _add_months(year: int, month: int, k: int) -> tuple[int, int]:
    idx = year * 12 + (month - 1) + k
    return idx // 12, idx % 12 + 1


def synth_generate(config: SynthConfig) -> SynthData:
    """Generate the three CSV texts. Each customer draws from its own stream
    keyed by ``(seed, "synth", index)``."""
    year0, month0 = (int(p) for p in config.start.split("-"))
    n = config.n_months
    lo, hi = config.onset_range
    cons = io.StringIO()
    insp = io.StringIO()
    truth = io.StringIO()
    cons.write("customer_id;reading_date;kwh_measured;kwh_billed\n")
    insp.write("customer_id;inspection_date;ntl_found\n")
    truth.write("customer_id;ntl_found;onset\n")
    labels = {}
    d = np.arange(n)
    for i in range(config.n_customers):
        gen = make_generator(derive_seed(config.seed, "synth", i))
        cid = f"C{i:06d}"
        label = int(gen.random() < config.ntl_fraction)
        phase = gen.uniform(0.0, 12.0)
        noise = gen.normal(0.0, 1.0, n) * config.noise_std
        jitter = gen.integers(-3, 4, n)
        onset = int(gen.integers(lo, hi + 1))
        after = int(gen.integers(1, 21))
        c = config.base_level + config.seasonal_amplitude * np.sin(
            2.0 * math.pi * (d + phase) / 12.0) + noise
        c = np.maximum(0.0, c)
        if label:
            c = np.where(d >= onset, c * (1.0 - config.fraud_drop_fraction), c)
        last = None
        for k in range(n):
            y, m = _add_months(year0, month0, k)
            day = min(15, calendar.monthrange(y, m)[1])
            date = dt.date(y, m, day) + dt.timedelta(days=int(jitter[k]))
            last = date
            cons.write(f"{cid};{date.isoformat()};{c[k]:.3f};{round(c[k]):d}\n")
        inspected = last + dt.timedelta(days=after)
        insp.write(f"{cid};{inspected.isoformat()};{label}\n")
        truth.write(f"{cid};{label};{onset if label else ''}\n")
        labels[cid] = label
    return SynthData(cons.getvalue(), insp.getvalue(), truth.getvalue(), labels)


def write_synth(config: SynthConfig, out_dir) -> dict[str, str]:
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = synth_generate(config)
    paths = {"consumptions": out / "consumptions.csv", "inspections": out / "inspections.csv",
             "truth": out / "truth.csv"}
    paths["consumptions"].write_text(data.consumptions_csv, encoding="utf-8")
    paths["inspections"].write_text(data.inspections_csv, encoding="utf-8")
    paths["truth"].write_text(data.truth_csv, encoding="utf-8")
    return {k: str(v) for k, v in paths.items()}
