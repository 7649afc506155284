"""Deterministic synthetic two-source corpus: harmonic voice over noise bursts.

Source 1 is a sum of 3-5 harmonics on a random fundamental in [110, 440] Hz
with a slow amplitude envelope; source 2 is band-passed noise bursts with
random onsets. The bands barely overlap, so an ideal ratio mask separates
the mixture well and a small frame-wise model can learn to do almost as well.

Seed conventions (documented, disjoint by construction):
  train corpora start at seed 1000, eval corpora at seed 2000.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dsp import WaveBuffer, read_wav, write_wav

__all__ = [
    "SynthTrack",
    "gen_track",
    "gen_corpus",
    "save_corpus",
    "load_corpus",
    "TRAIN_BASE_SEED",
    "EVAL_BASE_SEED",
]

TRAIN_BASE_SEED = 1000
EVAL_BASE_SEED = 2000

PEAK_TARGET = 0.95
# overlaps most of the harmonic range so frame-wise magnitude masks
# cannot be perfect, leaving headroom that informed perturbations can use
NOISE_BAND_HZ = (700.0, 3800.0)


@dataclass
class SynthTrack:
    track_id: str
    seed: int
    sample_rate: int
    duration: float
    sources: list[WaveBuffer] = field(default_factory=list)
    mixture: WaveBuffer = None

    def __post_init__(self):
        if self.mixture is None or not self.sources:
            raise ValueError("SynthTrack needs sources and a mixture")
        total = np.zeros(len(self.mixture))
        for s in self.sources:
            total = total + s.samples
        if not np.array_equal(total, self.mixture.samples):
            raise ValueError("mixture must equal the sum of sources exactly")
        if np.max(np.abs(self.mixture.samples)) > 0.99:
            raise ValueError("mixture peak exceeds 0.99 headroom")


def _harmonic_source(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    t = np.arange(n) / sr
    f0 = rng.uniform(110.0, 440.0)
    n_harm = int(rng.integers(3, 6))
    rolloff = rng.uniform(0.6, 1.4)
    # gentle vibrato smears harmonics across neighbouring bins over time
    vib_depth = rng.uniform(0.008, 0.016)
    vib_hz = rng.uniform(3.5, 6.5)
    vib_phase = rng.uniform(0.0, 2.0 * np.pi)
    vibrato = 1.0 + vib_depth * np.sin(2.0 * np.pi * vib_hz * t + vib_phase)
    inst_phase = 2.0 * np.pi * f0 * np.cumsum(vibrato) / sr
    x = np.zeros(n)
    for k in range(1, n_harm + 1):
        if f0 * k >= sr / 2:
            break
        amp = 1.0 / k ** rolloff
        phase = rng.uniform(0.0, 2.0 * np.pi)
        x += amp * np.sin(k * inst_phase + phase)
    # slow tremolo plus fade-in/out so frames see varying levels
    lfo_hz = rng.uniform(0.2, 1.0)
    lfo_phase = rng.uniform(0.0, 2.0 * np.pi)
    env = 0.55 + 0.35 * np.sin(2.0 * np.pi * lfo_hz * t + lfo_phase)
    fade = min(int(0.05 * sr), n // 4)
    ramp = np.ones(n)
    ramp[:fade] = np.linspace(0.0, 1.0, fade)
    ramp[-fade:] = np.linspace(1.0, 0.0, fade)
    return x * env * ramp


def _bandpass(rng: np.random.Generator, n: int, sr: int, lo: float, hi: float) -> np.ndarray:
    noise = rng.standard_normal(n)
    spec = np.fft.rfft(noise)
    freqs = np.fft.rfftfreq(n, d=1.0 / sr)
    gain = ((freqs >= lo) & (freqs <= hi)).astype(np.float64)
    return np.fft.irfft(spec * gain, n=n)


def _burst_source(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    colored = _bandpass(rng, n, sr, *NOISE_BAND_HZ)
    colored /= max(np.max(np.abs(colored)), 1e-12)
    env = np.zeros(n)
    n_bursts = max(2, int(round(4.5 * n / sr)))
    for _ in range(n_bursts):
        onset = int(rng.uniform(0.0, max(n - sr // 4, 1)))
        length = int(rng.uniform(0.10, 0.35) * sr)
        length = min(length, n - onset)
        attack = max(1, int(0.005 * sr))
        shape = np.exp(-np.arange(length) / (0.25 * length))
        shape[:attack] *= np.linspace(0.0, 1.0, attack)
        env[onset: onset + length] = np.maximum(env[onset: onset + length],
                                                rng.uniform(0.5, 1.0) * shape)
    return colored * env


def gen_track(seed: int, duration: float = 10.0, sample_rate: int = 8000,
              n_sources: int = 2) -> SynthTrack:
    """Deterministic synthetic track; same seed, same bytes."""
    if duration < 1.0:
        raise ValueError("duration must be at least 1 s")
    if n_sources != 2:
        raise ValueError("only the two-source configuration is implemented")
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    y1 = _harmonic_source(rng, n, sample_rate)
    y2 = _burst_source(rng, n, sample_rate)
    # equal source powers keep the summed separation loss evenly weighted
    p1, p2 = np.sqrt(np.mean(y1 ** 2)), np.sqrt(np.mean(y2 ** 2))
    if p2 > 0:
        y2 *= (p1 / p2)
    peak = max(np.max(np.abs(y1 + y2)), np.max(np.abs(y1)), np.max(np.abs(y2)))
    s = PEAK_TARGET / peak if peak > PEAK_TARGET else 1.0
    y1 *= s
    y2 *= s
    mixture = y1 + y2
    return SynthTrack(
        track_id=f"track_{seed:05d}",
        seed=seed,
        sample_rate=sample_rate,
        duration=duration,
        sources=[WaveBuffer(y1, sample_rate), WaveBuffer(y2, sample_rate)],
        mixture=WaveBuffer(mixture, sample_rate),
    )


def gen_corpus(n_tracks: int = 10, base_seed: int = EVAL_BASE_SEED,
               duration: float = 10.0, sample_rate: int = 8000) -> list[SynthTrack]:
    if n_tracks < 1:
        raise ValueError("n_tracks must be at least 1")
    return [gen_track(base_seed + i, duration, sample_rate) for i in range(n_tracks)]


def save_corpus(tracks: list[SynthTrack], out_dir) -> Path:
    """Write WAVs plus a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for tr in tracks:
        tdir = out_dir / tr.track_id
        tdir.mkdir(exist_ok=True)
        write_wav(tdir / "mixture.wav", tr.mixture, bit_depth=32)
        src_files = []
        for i, src in enumerate(tr.sources, start=1):
            name = f"source_{i}.wav"
            write_wav(tdir / name, src, bit_depth=32)
            src_files.append(f"{tr.track_id}/{name}")
        entries.append({
            "track_id": tr.track_id,
            "seed": tr.seed,
            "duration": tr.duration,
            "mixture": f"{tr.track_id}/mixture.wav",
            "sources": src_files,
        })
    manifest = {
        "sample_rate": tracks[0].sample_rate,
        "n_tracks": len(tracks),
        "tracks": entries,
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def load_corpus(corpus_dir) -> list[SynthTrack]:
    corpus_dir = Path(corpus_dir)
    manifest_path = corpus_dir / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(str(manifest_path))
    with open(manifest_path) as f:
        manifest = json.load(f)
    tracks = []
    for entry in manifest["tracks"]:
        mixture = read_wav(corpus_dir / entry["mixture"])
        sources = [read_wav(corpus_dir / rel) for rel in entry["sources"]]
        # float32 storage: re-derive the exact mixture from the stored sources
        total = np.zeros(len(mixture))
        for s in sources:
            total = total + s.samples
        tracks.append(SynthTrack(
            track_id=entry["track_id"],
            seed=int(entry["seed"]),
            sample_rate=manifest["sample_rate"],
            duration=float(entry["duration"]),
            sources=sources,
            mixture=WaveBuffer(total, manifest["sample_rate"]),
        ))
    return tracks
