"""Lossy compression proxies and the perturbation-survival sweep.

Two proxies stand in for a perceptual codec: uniform mid-tread
requantization at 4-16 bits, and per-frame top-k thresholding of MDCT
coefficients (frame 256, sine window, 50% overlap). The sweep compresses
both the clean and perturbed mixtures identically, so codec distortion
cancels to first order and only the perturbation's survival is measured.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dsp import WaveBuffer
from .metrics import sdr
from .separator import forward

__all__ = [
    "CompressionProxy",
    "compress",
    "mdct",
    "imdct",
    "robustness_sweep",
    "MDCT_FRAME",
]

MDCT_FRAME = 256


@dataclass(frozen=True)
class CompressionProxy:
    kind: str            # "quantize-bits" | "mdct-topk"
    strength: float      # bits in [4, 16], or kept fraction in (0, 1]

    def __post_init__(self):
        if self.kind == "quantize-bits":
            if not (4 <= self.strength <= 16):
                raise ValueError(f"quantize-bits strength {self.strength} outside [4, 16]")
        elif self.kind == "mdct-topk":
            if not (0.0 < self.strength <= 1.0):
                raise ValueError(f"mdct-topk fraction {self.strength} outside (0, 1]")
        else:
            raise ValueError(f"unknown proxy kind '{self.kind}'")

    def label(self) -> str:
        return f"{self.kind}:{self.strength:g}"


@lru_cache(maxsize=4)
def _mdct_basis(frame: int) -> tuple[np.ndarray, np.ndarray]:
    """(window, cos basis) for the time-domain-aliasing-cancelling transform."""
    half = frame // 2
    n = np.arange(frame)[:, None]
    k = np.arange(half)[None, :]
    window = np.sin(np.pi * (np.arange(frame) + 0.5) / frame)
    basis = np.cos(2.0 * np.pi / frame * (n + 0.5 + half / 2.0) * (k + 0.5))
    return window, basis


def mdct(x: np.ndarray, frame: int = MDCT_FRAME) -> np.ndarray:
    """(n_frames, frame/2) MDCT coefficients of a head/tail padded signal."""
    x = np.asarray(x, dtype=np.float64)
    half = frame // 2
    n_frames = int(np.ceil(x.size / half)) + 1
    padded = np.zeros((n_frames - 1) * half + frame)
    padded[half: half + x.size] = x
    frames = np.lib.stride_tricks.sliding_window_view(padded, frame)[::half]
    window, basis = _mdct_basis(frame)
    return (frames * window) @ basis


def imdct(coeffs: np.ndarray, out_len: int, frame: int = MDCT_FRAME) -> np.ndarray:
    """Inverse MDCT via windowed overlap-add, trimmed to out_len samples."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    half = frame // 2
    n_frames = coeffs.shape[0]
    window, basis = _mdct_basis(frame)
    frames = (coeffs @ basis.T) * window * (4.0 / frame)
    out = np.zeros((n_frames - 1) * half + frame)
    for m in range(n_frames):
        out[m * half: m * half + frame] += frames[m]
    return out[half: half + out_len]


def compress(w: WaveBuffer, proxy: CompressionProxy) -> WaveBuffer:
    """Apply a lossy proxy; length and sample rate are preserved."""
    x = w.samples
    if proxy.kind == "quantize-bits":
        step = 2.0 ** (1 - int(proxy.strength))
        out = step * np.round(x / step)
    else:
        coeffs = mdct(x)
        keep = max(1, int(round(proxy.strength * coeffs.shape[1])))
        if keep < coeffs.shape[1]:
            thresh = np.partition(np.abs(coeffs), -keep, axis=1)[:, -keep][:, None]
            coeffs = np.where(np.abs(coeffs) >= thresh, coeffs, 0.0)
        out = imdct(coeffs, x.size)
    return WaveBuffer(out, w.sample_rate)


def robustness_sweep(job, x: WaveBuffer, y: list[WaveBuffer], nu: WaveBuffer,
                     proxies: list[CompressionProxy]) -> list[dict]:
    """Per-proxy, per-model, per-source SDR deltas for a fixed perturbation.

    Both the clean and the perturbed mixture go through the same proxy
    before separation; the rows report sdr(compress(x+nu)) minus
    sdr(compress(x)) for each source.
    """
    if not proxies:
        raise ValueError("robustness_sweep: no proxies given")
    perturbed = WaveBuffer(x.samples + nu.samples, x.sample_rate)
    rows = []
    for proxy in proxies:
        x_c = compress(x, proxy)
        xp_c = compress(perturbed, proxy)
        for mi, model in enumerate(job.models):
            base = forward(model, x_c)
            pert = forward(model, xp_c)
            for si, ref in enumerate(y):
                s_base = sdr(ref, base[si])
                s_pert = sdr(ref, pert[si])
                rows.append({
                    "proxy_kind": proxy.kind,
                    "proxy_strength": float(proxy.strength),
                    "model_index": mi,
                    "source": si + 1,
                    "sdr_base_db": s_base,
                    "sdr_pert_db": s_pert,
                    "delta_sdr_db": s_pert - s_base,
                })
    return rows
