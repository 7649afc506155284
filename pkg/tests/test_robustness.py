import numpy as np
import pytest

from amicable import robustness as rb
from amicable.dsp import WaveBuffer
from amicable.metrics import sdr
from amicable.perturb import PerturbJob
from amicable.robustness import CompressionProxy, compress, imdct, mdct
from amicable.separator import init_model


@pytest.fixture
def noise_buf():
    rng = np.random.default_rng(0)
    return WaveBuffer(rng.uniform(-1, 1, 8000), 8000)


def test_quantize_16bit_error_bound(noise_buf):
    out = compress(noise_buf, CompressionProxy("quantize-bits", 16))
    assert np.max(np.abs(out.samples - noise_buf.samples)) <= 2 ** -15


def test_quantize_idempotent(noise_buf):
    proxy = CompressionProxy("quantize-bits", 8)
    once = compress(noise_buf, proxy)
    twice = compress(once, proxy)
    assert np.array_equal(once.samples, twice.samples)


def test_quantize_six_db_per_bit(noise_buf):
    # uniform noise: quantization SDR ~ 6.02*bits, allow +-1.5 dB per step
    values = {b: sdr(noise_buf.samples, compress(noise_buf, CompressionProxy("quantize-bits", b)).samples)
              for b in (5, 8, 11, 14)}
    for lo, hi in ((5, 8), (8, 11), (11, 14)):
        gain_per_bit = (values[hi] - values[lo]) / (hi - lo)
        assert abs(gain_per_bit - 6.02) < 1.5
    assert abs(values[8] - 6.02 * 8) < 2.0


def test_mdct_round_trip(noise_buf):
    coeffs = mdct(noise_buf.samples)
    back = imdct(coeffs, len(noise_buf))
    assert np.max(np.abs(back - noise_buf.samples)) < 1e-6


def test_mdct_topk_full_fraction_is_identity(noise_buf):
    out = compress(noise_buf, CompressionProxy("mdct-topk", 1.0))
    assert np.max(np.abs(out.samples - noise_buf.samples)) < 1e-6


def test_mdct_topk_partial_keeps_length_and_rate(noise_buf):
    out = compress(noise_buf, CompressionProxy("mdct-topk", 0.25))
    assert len(out) == len(noise_buf)
    assert out.sample_rate == noise_buf.sample_rate
    # thresholding must actually lose something on dense noise
    assert sdr(noise_buf.samples, out.samples) < 60.0


def test_mdct_topk_more_kept_is_closer(noise_buf):
    vals = [sdr(noise_buf.samples, compress(noise_buf, CompressionProxy("mdct-topk", f)).samples)
            for f in (0.1, 0.3, 0.6, 0.9)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_proxy_validation():
    with pytest.raises(ValueError, match="outside"):
        CompressionProxy("quantize-bits", 2)
    with pytest.raises(ValueError, match="outside"):
        CompressionProxy("mdct-topk", 0.0)
    with pytest.raises(ValueError, match="unknown proxy"):
        CompressionProxy("mp3", 128)


def test_identity_proxy_preserves_delta_sdr():
    rng = np.random.default_rng(1)
    sr = 8000
    t = np.arange(3 * sr) / sr
    y1 = 0.4 * np.sin(2 * np.pi * 300 * t)
    y2 = 0.1 * rng.standard_normal(3 * sr)
    x = WaveBuffer(y1 + y2, sr)
    sources = [WaveBuffer(y1, sr), WaveBuffer(y2, sr)]
    nu = WaveBuffer(0.003 * rng.standard_normal(3 * sr), sr)
    model = init_model("mask-mlp", seed=5)
    job = PerturbJob(models=[model], alphas=[1.0], iterations=1)

    rows = rb.robustness_sweep(job, x, sources, nu,
                               [CompressionProxy("mdct-topk", 1.0)])
    from amicable.separator import forward
    base = forward(model, x)
    pert = forward(model, WaveBuffer(x.samples + nu.samples, sr))
    for row in rows:
        si = row["source"] - 1
        expected = sdr(sources[si], pert[si]) - sdr(sources[si], base[si])
        assert row["delta_sdr_db"] == pytest.approx(expected, abs=1e-6)


def test_sweep_requires_proxies():
    model = init_model("mask-linear", seed=1)
    job = PerturbJob(models=[model], alphas=[1.0], iterations=1)
    buf = WaveBuffer(np.ones(1000) * 0.1, 8000)
    with pytest.raises(ValueError, match="no proxies"):
        rb.robustness_sweep(job, buf, [buf], buf, [])


def test_sweep_row_schema(noise_buf):
    model = init_model("mask-linear", seed=2)
    job = PerturbJob(models=[model], alphas=[1.0], iterations=1)
    rng = np.random.default_rng(3)
    y1 = WaveBuffer(noise_buf.samples * 0.6, 8000)
    y2 = WaveBuffer(noise_buf.samples * 0.4, 8000)
    nu = WaveBuffer(0.001 * rng.standard_normal(len(noise_buf)), 8000)
    rows = rb.robustness_sweep(job, noise_buf, [y1, y2], nu,
                               [CompressionProxy("quantize-bits", 12)])
    assert len(rows) == 2
    assert set(rows[0]) == {"proxy_kind", "proxy_strength", "model_index", "source",
                            "sdr_base_db", "sdr_pert_db", "delta_sdr_db"}
