"""Windowed STFT/ISTFT, framing geometry, and mono WAV file I/O.

Two STFT paths share one framing geometry: a plain numpy path (rfft)
for analysis, and a tensor path built from matmuls with windowed DFT
bases so the separator forward stays differentiable end to end.

Signals are padded by window//2 at the head (edge samples are otherwise
unrecoverable with zero-endpoint windows) and at the tail to a whole
number of frames; istft trims back to the requested length.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import tensorgrad as tg
from .tensorgrad import Tensor

__all__ = [
    "WaveBuffer",
    "ComplexSpectrogram",
    "DEFAULT_SAMPLE_RATE",
    "DEFAULT_WINDOW",
    "DEFAULT_HOP",
    "stft",
    "istft",
    "stft_tensor",
    "istft_tensor",
    "read_wav",
    "write_wav",
    "rms",
]

DEFAULT_SAMPLE_RATE = 8000
DEFAULT_WINDOW = 512
DEFAULT_HOP = 256


@dataclass
class WaveBuffer:
    """Mono sampled signal, nominal amplitude range [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("WaveBuffer requires a non-empty 1-d signal")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("WaveBuffer contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        self.sample_rate = int(self.sample_rate)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass
class ComplexSpectrogram:
    """frames x bins complex STFT values plus the geometry that made them."""

    values: np.ndarray
    window_size: int
    frame_hop: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.ndim != 2:
            raise ValueError("spectrogram must be 2-d (frames x bins)")
        if self.values.shape[1] != self.window_size // 2 + 1:
            raise ValueError(
                f"bins {self.values.shape[1]} != window_size/2+1 = {self.window_size // 2 + 1}"
            )

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_bins(self) -> int:
        return int(self.values.shape[1])


def rms(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sqrt(np.mean(x * x)))


def _check_geometry(window_size: int, hop: int) -> None:
    if window_size <= 0 or (window_size & (window_size - 1)) != 0:
        raise ValueError(f"window_size must be a power of two, got {window_size}")
    if hop <= 0 or window_size % hop != 0:
        raise ValueError(f"hop {hop} must divide window_size {window_size}")


@lru_cache(maxsize=8)
def _window(window_size: int, kind: str) -> np.ndarray:
    if kind == "hann":
        n = np.arange(window_size)
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / window_size)
    if kind == "rect":
        return np.ones(window_size)
    raise ValueError(f"unknown window kind '{kind}'")


def _frame_count(n_samples: int, window_size: int, hop: int) -> tuple[int, int]:
    """(n_frames, padded_len) for a head-padded, tail-padded signal."""
    n_frames = int(np.ceil(n_samples / hop)) + 1
    padded_len = (n_frames - 1) * hop + window_size
    return n_frames, padded_len


def _pad(x: np.ndarray, window_size: int, hop: int) -> np.ndarray:
    n_frames, padded_len = _frame_count(x.size, window_size, hop)
    head = window_size // 2
    tail = padded_len - head - x.size
    return np.concatenate([np.zeros(head), x, np.zeros(tail)])


@lru_cache(maxsize=16)
def _ola_denominator(window_size: int, hop: int, n_frames: int, kind: str) -> np.ndarray:
    w2 = _window(window_size, kind) ** 2
    out_len = (n_frames - 1) * hop + window_size
    denom = np.zeros(out_len)
    for m in range(n_frames):
        denom[m * hop: m * hop + window_size] += w2
    return denom


# ---------------------------------------------------------------------------
# numpy analysis path


def stft(w: WaveBuffer | np.ndarray, window_size: int = DEFAULT_WINDOW,
         hop: int = DEFAULT_HOP, window: str = "hann") -> ComplexSpectrogram:
    """Windowed DFT frames of a head/tail zero-padded signal."""
    _check_geometry(window_size, hop)
    x = w.samples if isinstance(w, WaveBuffer) else np.asarray(w, dtype=np.float64)
    if x.size < window_size:
        raise ValueError(f"signal length {x.size} shorter than window {window_size}")
    padded = _pad(x, window_size, hop)
    frames = np.lib.stride_tricks.sliding_window_view(padded, window_size)[::hop]
    spec = np.fft.rfft(frames * _window(window_size, window), axis=1)
    return ComplexSpectrogram(spec, window_size, hop)


def istft(spec: ComplexSpectrogram, out_len: int, window: str = "hann") -> np.ndarray:
    """Weighted overlap-add synthesis, trimmed to out_len samples."""
    window_size, hop = spec.window_size, spec.frame_hop
    _check_geometry(window_size, hop)
    head = window_size // 2
    n_frames = spec.n_frames
    max_len = (n_frames - 1) * hop + window_size - 2 * head
    if out_len <= 0 or out_len > max_len:
        raise ValueError(f"out_len {out_len} incompatible with {n_frames} frames (max {max_len})")
    frames = np.fft.irfft(spec.values, n=window_size, axis=1)
    frames *= _window(window_size, window)
    acc = np.zeros((n_frames - 1) * hop + window_size)
    for m in range(n_frames):
        acc[m * hop: m * hop + window_size] += frames[m]
    denom = _ola_denominator(window_size, hop, n_frames, window)
    acc = acc / np.where(denom > 1e-12, denom, 1.0)
    return acc[head: head + out_len]


# ---------------------------------------------------------------------------
# differentiable tensor path


@lru_cache(maxsize=8)
def _analysis_bases(window_size: int, kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Window-folded DFT bases: frames @ basis == rfft of windowed frames."""
    n = np.arange(window_size)[:, None]
    k = np.arange(window_size // 2 + 1)[None, :]
    ang = 2.0 * np.pi * n * k / window_size
    w = _window(window_size, kind)[:, None]
    return w * np.cos(ang), -(w * np.sin(ang))


@lru_cache(maxsize=8)
def _synthesis_bases(window_size: int, kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Inverse-DFT bases with the synthesis window folded in."""
    bins = window_size // 2 + 1
    k = np.arange(bins)[:, None]
    n = np.arange(window_size)[None, :]
    ang = 2.0 * np.pi * k * n / window_size
    c = np.full(bins, 2.0)
    c[0] = 1.0
    c[-1] = 1.0
    w = _window(window_size, kind)[None, :]
    icos = (c[:, None] * np.cos(ang) / window_size) * w
    isin = -(c[:, None] * np.sin(ang) / window_size) * w
    return icos, isin


def stft_tensor(x: Tensor, window_size: int = DEFAULT_WINDOW, hop: int = DEFAULT_HOP,
                window: str = "hann") -> tuple[Tensor, Tensor]:
    """Real/imag STFT of a 1-d tensor signal; differentiable in x."""
    _check_geometry(window_size, hop)
    n = x.data.size
    if n < window_size:
        raise ValueError(f"signal length {n} shorter than window {window_size}")
    n_frames, padded_len = _frame_count(n, window_size, hop)
    head = window_size // 2
    tail = padded_len - head - n
    padded = tg.concat([Tensor.const(np.zeros(head)), x, Tensor.const(np.zeros(tail))])
    frames = tg.frame_signal(padded, window_size, hop)
    cos_b, sin_b = _analysis_bases(window_size, window)
    return tg.matmul(frames, Tensor.const(cos_b)), tg.matmul(frames, Tensor.const(sin_b))


def istft_tensor(re: Tensor, im: Tensor, out_len: int, window_size: int = DEFAULT_WINDOW,
                 hop: int = DEFAULT_HOP, window: str = "hann") -> Tensor:
    """Overlap-add synthesis from real/imag tensors, trimmed to out_len."""
    _check_geometry(window_size, hop)
    if re.shape != im.shape:
        raise ValueError(f"re/im shape mismatch {re.shape} vs {im.shape}")
    n_frames = re.shape[0]
    head = window_size // 2
    max_len = (n_frames - 1) * hop + window_size - 2 * head
    if out_len <= 0 or out_len > max_len:
        raise ValueError(f"out_len {out_len} incompatible with {n_frames} frames (max {max_len})")
    icos, isin = _synthesis_bases(window_size, window)
    frames = tg.add(tg.matmul(re, Tensor.const(icos)), tg.matmul(im, Tensor.const(isin)))
    acc = tg.overlap_add(frames, hop)
    denom = _ola_denominator(window_size, hop, n_frames, window)
    inv = 1.0 / np.where(denom > 1e-12, denom, 1.0)
    normalized = tg.mul(acc, Tensor.const(inv))
    return tg.slice_axis(normalized, head, head + out_len)


# ---------------------------------------------------------------------------
# WAV (RIFF) I/O: mono, PCM-16 or IEEE float-32


def write_wav(path, w: WaveBuffer, bit_depth: int = 32) -> None:
    """Write mono WAV; 16-bit quantizes by rounding (no dithering)."""
    x = w.samples
    if bit_depth == 16:
        fmt_tag = 1
        pcm = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
        payload = pcm.tobytes()
    elif bit_depth == 32:
        fmt_tag = 3
        payload = x.astype("<f4").tobytes()
    else:
        raise ValueError(f"unsupported bit depth {bit_depth} (use 16 or 32)")

    block_align = bit_depth // 8
    byte_rate = w.sample_rate * block_align
    chunks = [
        b"fmt " + struct.pack("<IHHIIHH", 16, fmt_tag, 1, w.sample_rate,
                              byte_rate, block_align, bit_depth),
    ]
    if fmt_tag == 3:
        chunks.append(b"fact" + struct.pack("<II", 4, x.size))
    data = payload if len(payload) % 2 == 0 else payload + b"\x00"
    chunks.append(b"data" + struct.pack("<I", len(payload)) + data)
    body = b"WAVE" + b"".join(chunks)
    with open(path, "wb") as f:
        f.write(b"RIFF" + struct.pack("<I", len(body)) + body)


def read_wav(path) -> WaveBuffer:
    """Read mono PCM-16 or float-32 WAV into float64 samples."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise ValueError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(blob):
        cid = blob[pos:pos + 4]
        (size,) = struct.unpack("<I", blob[pos + 4:pos + 8])
        body = blob[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)

    if fmt is None or data is None:
        raise ValueError(f"{path}: missing fmt or data chunk")
    fmt_tag, channels, sample_rate, _, _, bits = fmt
    if channels != 1:
        raise ValueError(f"{path}: mono required, got {channels} channels")
    if fmt_tag == 1 and bits == 16:
        samples = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    elif fmt_tag == 3 and bits == 32:
        samples = np.frombuffer(data, dtype="<f4").astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported format tag={fmt_tag} bits={bits} "
                         "(PCM-16 or IEEE float-32 only)")
    return WaveBuffer(samples, sample_rate)
