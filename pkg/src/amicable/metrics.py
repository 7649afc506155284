"""SDR, input-degradation SDR, and median aggregation for reports.

SDR here is the plain energy ratio 10*log10(sum(ref^2) / sum((ref-est)^2)),
capped to +-120 dB. It is NOT the framewise bsseval variant; relative
comparisons (signs and orderings of deltas) are what this codebase reports.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dsp import WaveBuffer

__all__ = ["TrackScores", "sdr", "di_sdr", "aggregate", "EvalReport", "SDR_CAP_DB"]

SDR_CAP_DB = 120.0


def _samples(w) -> np.ndarray:
    if isinstance(w, WaveBuffer):
        return w.samples
    return np.asarray(w, dtype=np.float64)


def sdr(ref, est) -> float:
    """Energy-ratio SDR in dB, capped to [-120, +120]."""
    ref, est = _samples(ref), _samples(est)
    if ref.shape != est.shape:
        raise ValueError(f"sdr: length mismatch {ref.shape} vs {est.shape}")
    sig = float(np.sum(ref * ref))
    if sig == 0.0:
        raise ValueError("sdr: reference signal is all-zero")
    err = float(np.sum((ref - est) ** 2))
    if err == 0.0:
        return SDR_CAP_DB
    val = 10.0 * np.log10(sig / err)
    return float(np.clip(val, -SDR_CAP_DB, SDR_CAP_DB))


def di_sdr(x, nu) -> float:
    """Degradation-of-input SDR between the mixture and the perturbed mixture."""
    x, nu = _samples(x), _samples(nu)
    if x.shape != nu.shape:
        raise ValueError(f"di_sdr: length mismatch {x.shape} vs {nu.shape}")
    return sdr(x, x + nu)


@dataclass
class TrackScores:
    track_id: str
    per_source_sdr: list[float]
    di_sdr: float | None = None

    def __post_init__(self):
        for v in self.per_source_sdr:
            if not np.isfinite(v):
                raise ValueError(f"non-finite SDR in track {self.track_id}")


def aggregate(scores: list[TrackScores]) -> dict:
    """Per-source medians over tracks plus their mean ('avg')."""
    if not scores:
        raise ValueError("aggregate: empty score list")
    n_sources = len(scores[0].per_source_sdr)
    if any(len(s.per_source_sdr) != n_sources for s in scores):
        raise ValueError("aggregate: inconsistent source counts")
    per_source = [
        float(np.median([s.per_source_sdr[i] for s in scores]))
        for i in range(n_sources)
    ]
    out = {
        "per_source_median_db": per_source,
        "avg_db": float(np.mean(per_source)),
    }
    di = [s.di_sdr for s in scores if s.di_sdr is not None]
    if di:
        out["di_sdr_median_db"] = float(np.median(di))
    return out


@dataclass
class EvalReport:
    """Per-track rows plus aggregates, serialized as CSV and JSON.

    CSV holds one row per track x source with the listed columns; the JSON
    mirrors the rows and adds aggregates and a reproducibility stanza
    (command, effective config, config hash, seeds, package version).
    """

    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def add_row(self, **kwargs) -> None:
        missing = [c for c in self.columns if c not in kwargs]
        if missing:
            raise ValueError(f"row missing columns {missing}")
        self.rows.append({c: kwargs[c] for c in self.columns})

    def write_csv(self, path) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_fmt(row[c]) for c in self.columns])
        tmp.replace(path)

    def write_json(self, path) -> None:
        path = Path(path)
        payload = {
            "meta": self.meta,
            "aggregates": self.aggregates,
            "rows": self.rows,
        }
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
        tmp.replace(path)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)
