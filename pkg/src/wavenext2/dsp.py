"""Spectral front-end and back-end.

Covers the analysis chain (periodic Hann window, centered STFT, log-mel
extraction), the packed real-valued spectrum fed to the generator, the
inverse STFT, and the time-invariant spectral-enhancement post-filter.

Conventions fixed by this package:

* STFT frames are centered by reflection-padding ``n_fft // 2`` samples on
  both ends; frame count is ``floor(len / hop) + 1``.
* The mel filterbank uses the HTK scale ``2595 * log10(1 + f / 700)`` with
  triangular, peak-normalized filters over magnitude (not power) spectra.
* Log compression is the natural log with a 1e-5 magnitude floor.
* The packed spectrum concatenates the full real part with the imaginary
  part minus its DC and Nyquist rows, giving exactly ``n_fft`` channels.

STFT internals run in float64 so round trips through ``istft`` stay far
below the 1e-4 tolerance the rest of the package assumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .numerics import ShapeError

__all__ = [
    "Waveform",
    "ComplexSpec",
    "StftSpec",
    "MelSpectrogram",
    "MelConfig",
    "PostFilter",
    "FrameCountError",
    "hann_window",
    "stft",
    "istft",
    "stft_spec",
    "mel_filterbank",
    "log_mel",
    "estimate_postfilter",
    "apply_postfilter",
]

DEFAULT_SAMPLE_RATE = 24000
MAGNITUDE_FLOOR = 1e-5


class FrameCountError(ValueError):
    """Raised when a waveform yields fewer STFT frames than requested."""

    def __init__(self, available: int, required: int):
        super().__init__(
            f"waveform yields {available} STFT frames but {required} are required"
        )
        self.available = available
        self.required = required


@dataclass
class Waveform:
    """Mono audio: float32 samples (finite, nominally within [-4, 4]) plus rate."""

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float32)
        if s.ndim != 1:
            raise ShapeError("waveform must be 1-D", s.shape, ("n",))
        if not np.isfinite(s).all():
            raise ValueError("waveform contains NaN or Inf samples")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        self.samples = s

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass
class ComplexSpec:
    """One-sided complex spectrogram: bins [n_fft // 2 + 1, F]."""

    bins: np.ndarray
    n_fft: int
    hop: int

    def __post_init__(self):
        self.bins = np.asarray(self.bins)
        expected = self.n_fft // 2 + 1
        if self.bins.ndim != 2 or self.bins.shape[0] != expected:
            raise ShapeError("complex spectrum bin count", self.bins.shape, (expected, "F"))

    @property
    def n_frames(self) -> int:
        return self.bins.shape[1]


@dataclass
class StftSpec:
    """Packed real spectrum: full real part stacked on trimmed imaginary part.

    channels is an [n_fft, F] float32 matrix: rows 0 .. n_fft//2 carry the
    real part, rows n_fft//2+1 .. n_fft-1 the imaginary part of bins
    1 .. n_fft//2 - 1 (DC and Nyquist imaginary rows are identically zero
    for real input and are dropped).
    """

    channels: np.ndarray
    n_fft: int
    hop: int

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=np.float32)
        if self.channels.ndim != 2 or self.channels.shape[0] != self.n_fft:
            raise ShapeError("packed spectrum channels", self.channels.shape, (self.n_fft, "F"))

    @property
    def n_frames(self) -> int:
        return self.channels.shape[1]


@dataclass
class MelSpectrogram:
    """Floored natural-log mel magnitudes: values [n_mels, F]."""

    values: np.ndarray
    sample_rate: int
    hop: int
    n_fft: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise ShapeError("mel values must be rank 2", self.values.shape, ("n_mels", "F"))

    @property
    def n_mels(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class MelConfig:
    """Analysis settings for log-mel extraction."""

    n_fft: int
    hop: int
    n_mels: int = 128
    sample_rate: int = DEFAULT_SAMPLE_RATE
    f_min: float = 0.0
    f_max: float = 12000.0
    floor: float = MAGNITUDE_FLOOR


@dataclass
class PostFilter:
    """Time-invariant per-bin magnitude gains, length n_fft // 2 + 1."""

    gains: np.ndarray
    n_fft: int
    hop: int

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=np.float64)
        expected = self.n_fft // 2 + 1
        if g.ndim != 1 or g.shape[0] != expected:
            raise ShapeError("post-filter gain count", g.shape, (expected,))
        if (g < 0).any():
            raise ValueError("post-filter gains must be non-negative")
        self.gains = g


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window w[k] = 0.5 * (1 - cos(2 pi k / n)), n even."""
    if n <= 0 or n % 2 != 0:
        raise ValueError(f"window length must be a positive even integer, got {n}")
    k = np.arange(n, dtype=np.float64)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * k / n)


def _frame_count(n_samples: int, hop: int) -> int:
    return n_samples // hop + 1


def _centered_frames(samples: np.ndarray, n_fft: int, hop: int) -> np.ndarray:
    """Reflection-pad by n_fft//2 on both ends and slice into frames [F, n_fft]."""
    pad = n_fft // 2
    x = samples.astype(np.float64)
    if len(x) > pad:
        xp = np.pad(x, pad, mode="reflect")
    else:
        # too short to reflect fully; fall back to zero padding at the edges
        xp = np.pad(x, pad, mode="constant")
    frames = _frame_count(len(x), hop)
    xp = np.pad(xp, (0, max(0, (frames - 1) * hop + n_fft - len(xp))))
    windows = sliding_window_view(xp, n_fft)[::hop]
    return windows[:frames]


def stft(w: Waveform, n_fft: int, hop: int) -> ComplexSpec:
    """Centered, Hann-windowed, one-sided STFT with floor(len/hop)+1 frames."""
    if len(w) < 1:
        raise ValueError("cannot take the STFT of an empty waveform")
    if n_fft < hop:
        raise ValueError(f"n_fft ({n_fft}) must be >= hop ({hop})")
    window = hann_window(n_fft)
    frames = _centered_frames(w.samples, n_fft, hop)
    spec = np.fft.rfft(frames * window, axis=1).T  # [n_fft//2+1, F]
    return ComplexSpec(bins=spec, n_fft=n_fft, hop=hop)


def istft(s: ComplexSpec, target_len: int) -> Waveform:
    """Invert an STFT by squared-window-normalized overlap-add.

    Positions where the accumulated window power falls below 1e-8 produce
    zero output instead of dividing by a vanishing envelope. The result is
    trimmed (or zero-padded) to exactly target_len samples.
    """
    n_fft, hop = s.n_fft, s.hop
    window = hann_window(n_fft)
    frames = np.fft.irfft(s.bins.T, n=n_fft, axis=1)  # [F, n_fft]
    frames *= window
    n_frames = frames.shape[0]
    total = (n_frames - 1) * hop + n_fft if n_frames else n_fft
    acc = np.zeros(total, dtype=np.float64)
    wsum = np.zeros(total, dtype=np.float64)
    wsq = window * window
    for f in range(n_frames):
        start = f * hop
        acc[start:start + n_fft] += frames[f]
        wsum[start:start + n_fft] += wsq
    out = np.where(wsum < 1e-8, 0.0, acc / np.maximum(wsum, 1e-8))
    pad = n_fft // 2
    out = out[pad:pad + target_len]
    if len(out) < target_len:
        out = np.pad(out, (0, target_len - len(out)))
    return Waveform(out.astype(np.float32), sample_rate=DEFAULT_SAMPLE_RATE)


def stft_spec(w: Waveform, n_fft: int, hop: int, frames: int) -> StftSpec:
    """Pack the STFT of w into n_fft real channels, truncated to `frames`.

    Channels are the full real part (n_fft//2 + 1 rows) followed by the
    imaginary part of bins 1 .. n_fft//2 - 1 (n_fft//2 - 1 rows).
    """
    spec = stft(w, n_fft, hop)
    if spec.n_frames < frames:
        raise FrameCountError(available=spec.n_frames, required=frames)
    bins = spec.bins[:, :frames]
    packed = np.concatenate([bins.real, bins.imag[1:n_fft // 2]], axis=0)
    return StftSpec(channels=packed.astype(np.float32), n_fft=n_fft, hop=hop)


def hz_to_mel(f):
    """HTK mel scale: 2595 * log10(1 + f / 700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int,
                   f_min: float = 0.0, f_max: float = 12000.0) -> np.ndarray:
    """Triangular HTK-mel filterbank, peak 1 per filter: [n_mels, n_fft//2+1]."""
    if not (0 <= f_min < f_max <= sample_rate / 2):
        raise ValueError(
            f"band edges must satisfy 0 <= f_min < f_max <= Nyquist, "
            f"got f_min={f_min}, f_max={f_max}, Nyquist={sample_rate / 2}"
        )
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    bin_freqs = np.arange(n_fft // 2 + 1, dtype=np.float64) * sample_rate / n_fft
    lower = edges[:-2][:, None]
    center = edges[1:-1][:, None]
    upper = edges[2:][:, None]
    rising = (bin_freqs - lower) / np.maximum(center - lower, 1e-12)
    falling = (upper - bin_freqs) / np.maximum(upper - center, 1e-12)
    fb = np.maximum(0.0, np.minimum(rising, falling))
    return fb.astype(np.float32)


def log_mel(w: Waveform, cfg: MelConfig) -> MelSpectrogram:
    """ln(max(filterbank @ |STFT|, floor)) as an [n_mels, F] matrix."""
    spec = stft(w, cfg.n_fft, cfg.hop)
    mag = np.abs(spec.bins)
    fb = mel_filterbank(cfg.n_mels, cfg.n_fft, cfg.sample_rate, cfg.f_min, cfg.f_max)
    mel = fb.astype(np.float64) @ mag
    values = np.log(np.maximum(mel, cfg.floor))
    return MelSpectrogram(values=values.astype(np.float32),
                          sample_rate=cfg.sample_rate, hop=cfg.hop, n_fft=cfg.n_fft)


def _mean_magnitude(wavs: list[Waveform], n_fft: int, hop: int) -> np.ndarray:
    """Average magnitude spectrum over all frames of all utterances."""
    total = np.zeros(n_fft // 2 + 1, dtype=np.float64)
    frames = 0
    for w in wavs:
        mag = np.abs(stft(w, n_fft, hop).bins)
        total += mag.sum(axis=1)
        frames += mag.shape[1]
    return total / frames


def estimate_postfilter(refs: list[Waveform], syns: list[Waveform],
                        n_fft: int, hop: int,
                        clamp: tuple[float, float] = (0.1, 10.0)) -> PostFilter:
    """Per-bin gains restoring the reference long-term average spectrum.

    gains[k] = clamp(mean|REF_k| / max(mean|SYN_k|, 1e-8), g_min, g_max),
    averaged over every frame of every utterance in each list.
    """
    if not refs or not syns:
        raise ValueError("estimate_postfilter needs non-empty reference and synthesis lists")
    if len(refs) != len(syns):
        raise ValueError(f"reference / synthesis counts differ: {len(refs)} vs {len(syns)}")
    g_min, g_max = clamp
    ref_avg = _mean_magnitude(refs, n_fft, hop)
    syn_avg = _mean_magnitude(syns, n_fft, hop)
    gains = np.clip(ref_avg / np.maximum(syn_avg, 1e-8), g_min, g_max)
    return PostFilter(gains=gains, n_fft=n_fft, hop=hop)


def apply_postfilter(w: Waveform, pf: PostFilter) -> Waveform:
    """Scale each STFT bin's magnitude by its gain (phase untouched) and invert."""
    spec = stft(w, pf.n_fft, pf.hop)
    filtered = ComplexSpec(bins=spec.bins * pf.gains[:, None], n_fft=pf.n_fft, hop=pf.hop)
    out = istft(filtered, target_len=len(w))
    return Waveform(out.samples, sample_rate=w.sample_rate)
