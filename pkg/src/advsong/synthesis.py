"""Deterministic additive-sine rendering used by the toy TTS and corpus maker.

A schedule is a list of :class:`ToneSegment`; each segment holds a fixed set
of (frequency, relative amplitude) partials at some level for a whole number
of analysis frames. Segments with identical partials (the HMM states of one
phoneme) are rendered phase-continuously; level changes are smoothed with a
short window so state boundaries do not click.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Samples appended after the last scheduled frame so that a schedule of F
# frames yields an audio whose MFCC frame count is exactly F (25 ms / 10 ms).
FRAME_TAIL_PAD = 120


@dataclass(frozen=True)
class ToneSegment:
    """num_frames analysis frames of the given partials; partials None = silence."""

    num_frames: int
    partials: tuple | None  # ((freq_hz, rel_amp), ...)
    level: float = 0.0


def schedule_samples(segments, shift: int) -> int:
    return shift * sum(seg.num_frames for seg in segments) + FRAME_TAIL_PAD


def _smooth_kernel(rate: int) -> np.ndarray:
    width = max(9, int(0.005 * rate) | 1)  # ~5 ms, odd
    kernel = np.hanning(width + 2)[1:-1]
    return kernel / kernel.sum()


def render_segments(
    segments,
    rate: int,
    noise_amp: float,
    rng: np.random.Generator,
    shift: int = 80,
) -> np.ndarray:
    """Render a schedule to a waveform with seeded uniform background noise."""
    total = schedule_samples(segments, shift)
    out = np.zeros(total)
    kernel = _smooth_kernel(rate)
    pad = kernel.size // 2 + 1
    time = np.arange(total) / rate

    # Group consecutive segments sharing partials so phases stay continuous
    # across the states of one phoneme.
    position = 0
    run_start, run_partials, run_levels = 0, None, []
    runs = []
    for seg in list(segments) + [ToneSegment(0, None)]:
        if seg.partials != run_partials:
            if run_partials is not None and position > run_start:
                runs.append((run_start, position, run_partials, run_levels))
            run_start, run_partials, run_levels = position, seg.partials, []
        run_levels.append((position, position + seg.num_frames * shift, seg.level))
        position += seg.num_frames * shift

    for start, end, partials, levels in runs:
        envelope = np.zeros(total)
        for seg_start, seg_end, level in levels:
            envelope[seg_start:seg_end] = level
        lo, hi = max(0, start - pad), min(total, end + pad)
        smoothed = np.convolve(envelope[max(0, lo - pad) : min(total, hi + pad)], kernel, "same")
        span = slice(lo, hi)
        env_span = smoothed[lo - max(0, lo - pad) : hi - max(0, lo - pad)]
        for freq, amp in partials:
            out[span] += env_span * amp * np.sin(2.0 * np.pi * freq * time[span])

    if noise_amp > 0.0:
        out += rng.uniform(-noise_amp, noise_amp, total)
    peak = np.max(np.abs(out)) if total else 0.0
    if peak > 1.0:
        out /= peak * 1.001
    return out


# Pentatonic-ish pitch set for toy songs, all partials under the 8 kHz Nyquist.
_SONG_SCALE = (220.0, 247.0, 294.0, 330.0, 392.0, 440.0, 494.0, 587.0, 659.0, 784.0)


def song_schedule(num_frames: int, rng: np.random.Generator):
    """Random-walk melody: each note is a fundamental plus two harmonics."""
    segments = []
    scheduled = 0
    degree = int(rng.integers(0, len(_SONG_SCALE)))
    while scheduled < num_frames:
        length = min(int(rng.integers(20, 41)), num_frames - scheduled)
        degree = int(np.clip(degree + rng.integers(-2, 3), 0, len(_SONG_SCALE) - 1))
        f0 = _SONG_SCALE[degree]
        partials = ((f0, 0.60), (2.0 * f0, 0.30), (3.0 * f0, 0.15))
        level = 0.30 + 0.15 * rng.random()
        segments.append(ToneSegment(length, partials, level))
        scheduled += length
    return segments


def synthesize_song(seconds: float, seed: int, rate: int = 8000):
    """Deterministic synthetic music to act as a carrier waveform."""
    from .audio import AudioBuffer

    shift = int(round(0.010 * rate))
    num_frames = max(1, int(round(seconds * rate)) // shift)
    rng = np.random.default_rng((int(seed), 0x50E6))
    samples = render_segments(song_schedule(num_frames, rng), rate, 0.004, rng, shift)
    return AudioBuffer(samples, rate)
