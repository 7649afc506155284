"""Amicable/adversarial perturbations for mask-based source separation.

Given a mixture, its true sources, and one or more frozen differentiable
separation models, compute an additive perturbation that improves (positive
weight) or degrades (negative weight) each model's separation, subject to a
short-term power-ratio constraint that keeps the perturbation quiet relative
to the mixture.
"""

from .dsp import ComplexSpectrogram, WaveBuffer, istft, read_wav, stft, write_wav
from .datagen import SynthTrack, gen_corpus, gen_track, load_corpus, save_corpus
from .metrics import EvalReport, TrackScores, aggregate, di_sdr, sdr
from .perturb import (AdamConfig, AdamState, PerturbDivergedError, PerturbJob,
                      PerturbResult, adam_step, amicable_loss, mmpl_loss, optimize,
                      stpr)
from .robustness import CompressionProxy, compress, robustness_sweep
from .separator import (SeparatorModel, TrainConfig, TrainDivergedError, forward,
                        init_model, load_model, save_model, train)
from .tensorgrad import Tape, Tensor, TensorError, backward, grad_check

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Tensor", "Tape", "TensorError", "backward", "grad_check",
    "WaveBuffer", "ComplexSpectrogram", "stft", "istft", "read_wav", "write_wav",
    "SynthTrack", "gen_track", "gen_corpus", "save_corpus", "load_corpus",
    "SeparatorModel", "TrainConfig", "TrainDivergedError", "init_model", "forward",
    "train", "save_model", "load_model",
    "PerturbJob", "PerturbResult", "AdamConfig", "AdamState", "PerturbDivergedError",
    "stpr", "amicable_loss", "mmpl_loss", "adam_step", "optimize",
    "TrackScores", "EvalReport", "sdr", "di_sdr", "aggregate",
    "CompressionProxy", "compress", "robustness_sweep",
]
