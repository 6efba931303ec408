"""Mono waveform container, 16-bit PCM WAV I/O, resampling, and power/SNR math.

Everything downstream (features, models, crafting, defenses) runs on
:class:`AudioBuffer`. All operations are pure: buffers are never mutated,
results are new buffers.
"""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass

import numpy as np

# Internal pipeline rate. Inputs from disk are resampled to this on load by
# the CLI so FFT sizes stay small and runs stay desk-scale.
CANONICAL_RATE = 8000

PCM_SCALE = 32768  # int16 full scale; float = int / PCM_SCALE


class WavFormatError(Exception):
    """File is not a WAV this toolkit can read."""


class UnsupportedEncodingError(WavFormatError):
    """WAV exists but is not 16-bit integer PCM."""


class UnsupportedChannelsError(WavFormatError):
    """WAV exists but is not mono."""


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """A mono waveform: float samples in [-1, 1] and a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite values")
        if samples.size and np.max(np.abs(samples)) > 1.0 + 1e-12:
            raise ValueError("samples exceed [-1, 1]")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def read_wav(path) -> AudioBuffer:
    """Read a 16-bit PCM mono WAV file.

    Integer samples are mapped to [-1, 1) by division by 32768; the sample
    rate comes from the header. Raises FileNotFoundError for a missing file,
    UnsupportedEncodingError for non-PCM or non-16-bit data, and
    UnsupportedChannelsError for anything that is not mono.
    """
    try:
        reader = wave.open(str(path), "rb")
    except FileNotFoundError:
        raise
    except wave.Error as exc:
        raise UnsupportedEncodingError(f"{path}: {exc}") from exc
    with reader:
        if reader.getnchannels() != 1:
            raise UnsupportedChannelsError(
                f"{path}: expected mono, got {reader.getnchannels()} channels"
            )
        if reader.getsampwidth() != 2:
            raise UnsupportedEncodingError(
                f"{path}: expected 16-bit samples, got {8 * reader.getsampwidth()}-bit"
            )
        rate = reader.getframerate()
        raw = reader.readframes(reader.getnframes())
    ints = np.frombuffer(raw, dtype="<i2")
    return AudioBuffer(ints.astype(np.float64) / PCM_SCALE, rate)


def write_wav(buffer: AudioBuffer, path) -> None:
    """Write a buffer as 16-bit PCM mono WAV.

    Quantization is round-to-nearest with saturation at full scale, so a
    write/read round trip reproduces every sample within 1/32768.
    """
    if len(buffer) == 0:
        raise ValueError("refusing to write an empty buffer")
    ints = np.clip(np.round(buffer.samples * PCM_SCALE), -PCM_SCALE, PCM_SCALE - 1)
    with wave.open(str(path), "wb") as writer:
        writer.setnchannels(1)
        writer.setsampwidth(2)
        writer.setframerate(buffer.sample_rate)
        writer.writeframes(ints.astype("<i2").tobytes())


def signal_power(buffer: AudioBuffer) -> float:
    """Mean-square power of the waveform."""
    if len(buffer) == 0:
        raise ValueError("power of an empty buffer is undefined")
    return float(np.mean(buffer.samples**2))


def snr_db(signal: AudioBuffer, noise: AudioBuffer) -> float:
    """Signal-to-noise ratio 10*log10(P_signal / P_noise), in dB."""
    if len(signal) != len(noise):
        raise ValueError(f"length mismatch: {len(signal)} vs {len(noise)}")
    p_noise = signal_power(noise)
    if p_noise == 0.0:
        raise ValueError("noise has zero power; SNR is undefined")
    return 10.0 * math.log10(signal_power(signal) / p_noise)


def _lowpass_kernel(cutoff_hz: float, rate: int, taps: int = 101) -> np.ndarray:
    """Windowed-sinc low-pass FIR, unit DC gain, odd tap count."""
    mid = taps // 2
    k = np.arange(taps) - mid
    fc = cutoff_hz / rate
    kernel = 2.0 * fc * np.sinc(2.0 * fc * k) * np.hamming(taps)
    return kernel / kernel.sum()


def resample_to(buffer: AudioBuffer, new_rate: int) -> AudioBuffer:
    """Resample to a new rate by linear interpolation onto the new grid.

    Downward resampling low-pass filters first (cutoff 0.45 x new rate) to
    suppress aliasing; upward resampling interpolates directly. new_rate
    equal to the current rate returns the buffer unchanged.
    """
    if new_rate <= 0:
        raise ValueError(f"target rate must be positive, got {new_rate}")
    if new_rate == buffer.sample_rate:
        return buffer
    x = buffer.samples
    if new_rate < buffer.sample_rate:
        x = np.convolve(x, _lowpass_kernel(0.45 * new_rate, buffer.sample_rate), "same")
    new_len = max(1, int(round(len(buffer) * new_rate / buffer.sample_rate)))
    positions = np.arange(new_len) * (buffer.sample_rate / new_rate)
    resampled = np.interp(positions, np.arange(x.size), x)
    return AudioBuffer(np.clip(resampled, -1.0, 1.0), new_rate)


def downsample(buffer: AudioBuffer, ratio: float) -> AudioBuffer:
    """Decimate to round(ratio * rate) samples/second, ratio in (0, 1].

    Ratio 1.0 is the exact identity; otherwise the signal is anti-alias
    filtered and linearly interpolated onto the coarser grid.
    """
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"downsample ratio must be in (0, 1], got {ratio}")
    if ratio == 1.0:
        return buffer
    return resample_to(buffer, max(1, int(round(ratio * buffer.sample_rate))))


def mix(a: AudioBuffer, b: AudioBuffer) -> AudioBuffer:
    """Elementwise sum of two equal-length, equal-rate buffers.

    The sum saturates (hard clip) at [-1, 1], matching DAC behaviour;
    callers that need headroom must budget for it in their amplitudes.
    """
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if a.sample_rate != b.sample_rate:
        raise ValueError(f"rate mismatch: {a.sample_rate} vs {b.sample_rate}")
    return AudioBuffer(np.clip(a.samples + b.samples, -1.0, 1.0), a.sample_rate)
