"""Windowed DFT spectrogram primitives and sample-rate conversion.

All inputs and outputs are plain numpy arrays wrapped in small dataclasses;
every function here is pure and deterministic.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInputError, InvalidArgumentError, UnsupportedOperationError

ACCEPTED_RATES = (8000, 16000, 22050, 44100, 48000)

LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class AudioClip:
    """Mono audio samples in [-1, 1] at a known sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if int(self.sample_rate) not in ACCEPTED_RATES:
            raise InvalidArgumentError(
                f"sample_rate {self.sample_rate} not in accepted set {ACCEPTED_RATES}"
            )
        object.__setattr__(
            self, "samples", np.asarray(self.samples, dtype=np.float64)
        )
        if self.samples.ndim != 1:
            raise InvalidArgumentError("AudioClip samples must be 1-D (mono)")

    @property
    def duration_s(self):
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class LogSpectrogram:
    """Natural-log magnitude spectrogram, [n_bins x n_frames]."""

    values: np.ndarray
    bin_hz: float
    hop_s: float

    @property
    def n_bins(self):
        return self.values.shape[0]

    @property
    def n_frames(self):
        return self.values.shape[1]

    def magnitudes(self):
        """Linear magnitudes (inverse of the log)."""
        return np.exp(self.values)


def hamming_window(n):
    """Hamming coefficients w[k] = 0.54 - 0.46*cos(2*pi*k/(n-1))."""
    if n < 2:
        raise InvalidArgumentError(f"window length must be >= 2, got {n}")
    k = np.arange(n)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * k / (n - 1))


def log_spectrogram(clip, win_s, hop_s, n_dft):
    """Framed log-magnitude spectrum of `clip`.

    Frame t covers samples [t*hop, t*hop + win); each frame is Hamming
    windowed, zero-padded to n_dft and transformed; a final partial frame
    is dropped. Output values are ln(max(|X|, 1e-10)).
    """
    sr = clip.sample_rate
    win = int(round(win_s * sr))
    hop = int(round(hop_s * sr))
    if win < 2 or hop < 1:
        raise InvalidArgumentError("window/hop too small for sample rate")
    if win > n_dft:
        raise InvalidArgumentError(
            f"window of {win} samples exceeds n_dft={n_dft}"
        )
    x = clip.samples
    if len(x) < win:
        raise EmptyInputError(
            f"clip of {len(x)} samples shorter than one {win}-sample window"
        )
    n_frames = (len(x) - win) // hop + 1
    w = hamming_window(win)
    idx = hop * np.arange(n_frames)[:, None] + np.arange(win)[None, :]
    frames = x[idx] * w
    mag = np.abs(np.fft.rfft(frames, n=n_dft, axis=1))
    values = np.log(np.maximum(mag, LOG_FLOOR)).T
    return LogSpectrogram(values=values, bin_hz=sr / n_dft, hop_s=hop / sr)


def _lowpass_taps(cutoff_norm, n_taps=64):
    # windowed-sinc FIR; cutoff_norm = cutoff / sample_rate
    n = np.arange(n_taps)
    center = (n_taps - 1) / 2.0
    h = 2.0 * cutoff_norm * np.sinc(2.0 * cutoff_norm * (n - center))
    h *= hamming_window(n_taps)
    return h / h.sum()


def resample(clip, target_hz):
    """Downsample `clip` to target_hz (anti-aliased; upsampling rejected)."""
    if int(target_hz) not in ACCEPTED_RATES:
        raise InvalidArgumentError(f"target rate {target_hz} not accepted")
    sr = clip.sample_rate
    if target_hz > sr:
        raise UnsupportedOperationError("upsampling is not supported")
    if target_hz == sr:
        return AudioClip(samples=clip.samples.copy(), sample_rate=sr)
    h = _lowpass_taps(0.45 * target_hz / sr)
    filtered = np.convolve(clip.samples, h, mode="full")
    delay = (len(h) - 1) / 2.0
    n_out = int(round(len(clip.samples) * target_hz / sr))
    # linear interpolation at the fractional source positions
    pos = np.arange(n_out) * (sr / target_hz) + delay
    out = np.interp(pos, np.arange(len(filtered)), filtered)
    return AudioClip(samples=out, sample_rate=int(target_hz))
