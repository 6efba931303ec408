"""MFCC front end with an exact analytic gradient back to raw samples.

Forward pipeline per frame: pre-emphasis -> framing -> Hamming window ->
power spectrum (|rfft|^2) -> triangular mel filterbank -> floored log ->
orthonormal type-II DCT truncated to the cepstral count. Every stage has a
hand-written adjoint so a loss on the feature matrix can be pulled back to
the waveform exactly (overlapping frames accumulate additively).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dct, idct

from .audio import AudioBuffer


@dataclass(frozen=True)
class FeatureConfig:
    """Front-end parameters; the defaults follow common ASR practice."""

    frame_length_ms: float = 25.0
    frame_shift_ms: float = 10.0
    preemphasis: float = 0.97
    num_mel_filters: int = 26
    num_cepstra: int = 13
    log_floor: float = 1e-10
    fft_size: int = 256

    def __post_init__(self):
        if self.frame_shift_ms > self.frame_length_ms:
            raise ValueError("frame shift must not exceed frame length")
        if not 0.0 <= self.preemphasis < 1.0:
            raise ValueError("preemphasis must lie in [0, 1)")
        if self.num_cepstra > self.num_mel_filters:
            raise ValueError("cannot keep more cepstra than mel filters")
        if self.log_floor <= 0.0:
            raise ValueError("log floor must be positive")
        if self.fft_size < 2 or self.fft_size & (self.fft_size - 1):
            raise ValueError("fft_size must be a power of two")

    def frame_samples(self, rate: int) -> int:
        return int(round(self.frame_length_ms * rate / 1000.0))

    def shift_samples(self, rate: int) -> int:
        return int(round(self.frame_shift_ms * rate / 1000.0))


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Frames x cepstra, plus the framing metadata needed to invert indexing."""

    values: np.ndarray
    frame_offsets: np.ndarray  # first-sample index of each frame
    frame_length: int

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]


def frame_count(num_samples: int, frame_len: int, shift: int) -> int:
    if num_samples < frame_len:
        return 0
    return (num_samples - frame_len) // shift + 1


@lru_cache(maxsize=8)
def mel_filterbank(num_filters: int, fft_size: int, rate: int) -> np.ndarray:
    """Triangular filters on the mel scale, (num_filters, fft_size//2 + 1)."""

    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    edges = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(rate / 2.0), num_filters + 2))
    bin_freqs = np.arange(fft_size // 2 + 1) * (rate / fft_size)
    bank = np.zeros((num_filters, bin_freqs.size))
    for j in range(num_filters):
        left, center, right = edges[j], edges[j + 1], edges[j + 2]
        up = (bin_freqs - left) / (center - left)
        down = (right - bin_freqs) / (right - center)
        bank[j] = np.clip(np.minimum(up, down), 0.0, None)
    return bank


def _preemphasize(x: np.ndarray, coeff: float) -> np.ndarray:
    y = x.copy()
    y[1:] -= coeff * x[:-1]
    return y


def _frame_signal(y: np.ndarray, frame_len: int, shift: int) -> np.ndarray:
    n = frame_count(y.size, frame_len, shift)
    view = np.lib.stride_tricks.sliding_window_view(y, frame_len)
    return view[:: shift][:n].copy()


class _MfccCache:
    """Intermediates of one forward pass, reused by the backward pass."""

    __slots__ = ("cfg", "rate", "num_samples", "window", "spectra", "mel_energies")

    def __init__(self, cfg, rate, num_samples, window, spectra, mel_energies):
        self.cfg = cfg
        self.rate = rate
        self.num_samples = num_samples
        self.window = window
        self.spectra = spectra
        self.mel_energies = mel_energies


def _mfcc_forward(samples: np.ndarray, rate: int, cfg: FeatureConfig):
    frame_len = cfg.frame_samples(rate)
    shift = cfg.shift_samples(rate)
    if cfg.fft_size < frame_len:
        raise ValueError(f"fft_size {cfg.fft_size} smaller than frame of {frame_len} samples")
    if samples.size < frame_len:
        raise ValueError(f"audio of {samples.size} samples is shorter than one frame ({frame_len})")
    emphasized = _preemphasize(samples, cfg.preemphasis)
    window = np.hamming(frame_len)
    frames = _frame_signal(emphasized, frame_len, shift) * window
    spectra = np.fft.rfft(frames, cfg.fft_size)
    power = spectra.real**2 + spectra.imag**2
    mel_energies = power @ mel_filterbank(cfg.num_mel_filters, cfg.fft_size, rate).T
    log_mel = np.log(np.maximum(mel_energies, cfg.log_floor))
    ceps = dct(log_mel, type=2, norm="ortho", axis=1)[:, : cfg.num_cepstra]
    cache = _MfccCache(cfg, rate, samples.size, window, spectra, mel_energies)
    offsets = shift * np.arange(frames.shape[0])
    return FeatureMatrix(ceps, offsets, frame_len), cache


def _mfcc_backward(cache: _MfccCache, grad_features: np.ndarray) -> np.ndarray:
    cfg = cache.cfg
    n_frames, n_mel = cache.mel_energies.shape
    frame_len = cfg.frame_samples(cache.rate)
    shift = cfg.shift_samples(cache.rate)
    if grad_features.shape != (n_frames, cfg.num_cepstra):
        raise ValueError(
            f"upstream gradient shape {grad_features.shape} does not match "
            f"features ({n_frames}, {cfg.num_cepstra})"
        )
    # Truncated orthonormal DCT: adjoint = inverse on the zero-padded gradient.
    grad_full = np.zeros((n_frames, n_mel))
    grad_full[:, : cfg.num_cepstra] = grad_features
    grad_log_mel = idct(grad_full, type=2, norm="ortho", axis=1)
    # Floored log: zero gradient wherever the floor is active.
    active = cache.mel_energies > cfg.log_floor
    grad_mel = np.where(active, grad_log_mel / np.maximum(cache.mel_energies, cfg.log_floor), 0.0)
    grad_power = grad_mel @ mel_filterbank(cfg.num_mel_filters, cfg.fft_size, cache.rate)
    # |X|^2 through the rfft: gx = nfft * irfft(gP * X) with the two
    # self-conjugate bins doubled (they are not duplicated by Hermitian
    # symmetry the way interior bins are).
    product = grad_power * cache.spectra
    product[:, 0] *= 2.0
    product[:, -1] *= 2.0
    grad_frames = cfg.fft_size * np.fft.irfft(product, cfg.fft_size)[:, :frame_len]
    grad_frames *= cache.window
    # Overlapping frames scatter-add into shared samples.
    grad_emphasized = np.zeros(cache.num_samples)
    for i in range(n_frames):
        start = i * shift
        grad_emphasized[start : start + frame_len] += grad_frames[i]
    grad_samples = grad_emphasized.copy()
    grad_samples[:-1] -= cfg.preemphasis * grad_emphasized[1:]
    return grad_samples


def extract_mfcc(audio: AudioBuffer, cfg: FeatureConfig = FeatureConfig()) -> FeatureMatrix:
    """Extract the MFCC matrix (frames x num_cepstra) of a waveform."""
    features, _ = _mfcc_forward(audio.samples, audio.sample_rate, cfg)
    return features


def mfcc_input_gradient(
    audio: AudioBuffer, cfg: FeatureConfig, upstream: np.ndarray
) -> np.ndarray:
    """Exact vector-Jacobian product of the MFCC pipeline.

    ``upstream`` is a gradient with respect to the feature matrix; the result
    is the corresponding gradient with respect to the raw samples.
    """
    _, cache = _mfcc_forward(audio.samples, audio.sample_rate, cfg)
    return _mfcc_backward(cache, np.asarray(upstream, dtype=np.float64))


def splice_context(features, left: int, right: int) -> np.ndarray:
    """Stack each row with its left/right neighbours, replicating at edges.

    Accepts a FeatureMatrix or a plain 2-D array; returns an array of width
    (left + right + 1) times the input width.
    """
    values = features.values if isinstance(features, FeatureMatrix) else np.asarray(features)
    n = values.shape[0]
    rows = np.arange(n)
    blocks = [values[np.clip(rows + d, 0, n - 1)] for d in range(-left, right + 1)]
    return np.hstack(blocks)


def splice_adjoint(grad_spliced: np.ndarray, left: int, right: int) -> np.ndarray:
    """Adjoint of splice_context: scatter-add context blocks back onto rows."""
    n, total = grad_spliced.shape
    width = total // (left + right + 1)
    if width * (left + right + 1) != total:
        raise ValueError("spliced gradient width is not a multiple of the context count")
    grad = np.zeros((n, width))
    rows = np.arange(n)
    for i, d in enumerate(range(-left, right + 1)):
        np.add.at(grad, np.clip(rows + d, 0, n - 1), grad_spliced[:, i * width : (i + 1) * width])
    return grad
