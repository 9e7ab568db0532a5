"""Audio front end and Wiener-mask reconstruction.

Signals become count matrices through a Hann-windowed STFT at 50%
overlap, magnitude scaling and rounding; separated sources come back
through soft masks on the complex mixture and weighted overlap-add.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import gcd

import numpy as np
from scipy.io import wavfile
from scipy.signal import get_window, resample_poly

from .errors import FormatError, ValidationError

DEFAULT_SAMPLE_RATE = 22050
DEFAULT_TARGET_MAX = 1000


@dataclass(frozen=True)
class StftConfig:
    fft_size: int = 1024
    hop: int | None = None
    window: str = "hann"
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        n = int(self.fft_size)
        if n < 2 or n & (n - 1):
            raise ValidationError("invalid-config", "fft_size must be a power of two")
        hop = n // 2 if self.hop is None else int(self.hop)
        if hop < 1 or n % hop:
            raise ValidationError("invalid-config", "hop must divide fft_size")
        if self.sample_rate <= 0:
            raise ValidationError("invalid-config", "sample_rate must be positive")
        object.__setattr__(self, "hop", hop)
        w = self.analysis_window()
        ola = np.zeros(n)
        for start in range(0, n, hop):
            ola += np.roll(w, start)
        if not np.allclose(ola, ola[0], rtol=1e-10):
            raise ValidationError("invalid-config", f"{self.window} window is not COLA at hop {hop}")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    def analysis_window(self) -> np.ndarray:
        # periodic (fftbins=True) so that 50% overlap sums to a constant
        return get_window(self.window, self.fft_size, fftbins=True)

    def to_dict(self):
        return {"fft_size": self.fft_size, "hop": self.hop, "window": self.window,
                "sample_rate": self.sample_rate}


@dataclass(frozen=True)
class Spectrogram:
    coeffs: np.ndarray
    config: StftConfig
    scale: float = 1.0
    length: int | None = None

    def __post_init__(self):
        if self.coeffs.ndim != 2 or self.coeffs.shape[0] != self.config.n_bins:
            raise ValidationError("dimension-mismatch",
                                  f"expected {self.config.n_bins} frequency bins, got {self.coeffs.shape}")

    @property
    def n_frames(self) -> int:
        return self.coeffs.shape[1]

    def magnitude(self) -> np.ndarray:
        return np.abs(self.coeffs)

    def power_envelope(self) -> np.ndarray:
        """Per-frame energy, the reference curve for component matching."""
        return np.sum(np.abs(self.coeffs) ** 2, axis=0)


def stft(signal, cfg: StftConfig) -> Spectrogram:
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError("dimension-mismatch", "signal must be 1-D")
    n, hop = cfg.fft_size, cfg.hop
    if len(x) < n:
        raise ValidationError("signal-too-short", f"need at least {n} samples, got {len(x)}")
    n_frames = (len(x) - n) // hop + 1
    idx = np.arange(n)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = x[idx] * cfg.analysis_window()
    return Spectrogram(coeffs=np.fft.rfft(frames, axis=1).T, config=cfg, length=len(x))


def istft(spec: Spectrogram) -> np.ndarray:
    """Overlap-add inverse with constant-overlap-add normalization.

    Frames are summed without a synthesis window and divided by the
    constant window sum, which inverts :func:`stft` on the fully
    overlapped interior.  Edge samples covered by a single frame keep the
    analysis taper; dividing them out would amplify masked spectra.
    """
    cfg = spec.config
    n, hop = cfg.fft_size, cfg.hop
    cola = cfg.analysis_window().sum() / hop
    frames = np.fft.irfft(spec.coeffs.T, n=n, axis=1)
    T = spec.n_frames
    length = (T - 1) * hop + n
    out = np.zeros(length)
    for m in range(T):
        out[m * hop:m * hop + n] += frames[m]
    out /= cola
    if spec.length is not None and spec.length > length:
        out = np.concatenate([out, np.zeros(spec.length - length)])
    return out


def quantization_scale(spec: Spectrogram, target_max: int = DEFAULT_TARGET_MAX) -> float:
    peak = float(spec.magnitude().max())
    if peak <= 0:
        raise ValidationError("all-zero-spectrogram", "cannot quantize a silent spectrogram")
    return target_max / peak


def quantize(spec: Spectrogram, target_max: int = DEFAULT_TARGET_MAX):
    """Scale magnitudes so the peak maps to ``target_max`` and round.

    Returns ``(counts, spec)`` where the returned spectrogram records the
    scale that was applied.
    """
    if int(target_max) != target_max or target_max < 1:
        raise ValidationError("invalid-input", "target_max must be a positive integer")
    mag = spec.magnitude()
    peak = mag.max()
    if peak <= 0:
        raise ValidationError("all-zero-spectrogram", "cannot quantize a silent spectrogram")
    counts = np.rint(mag / peak * target_max).astype(np.int64)
    return counts, replace(spec, scale=target_max / float(peak))


def wiener_masks(W, HS, groups) -> list[np.ndarray]:
    """Soft masks ``sum_{k in g} W_fk HS_kt / sum_k W_fk HS_kt``; 0 where the total is 0."""
    W = np.asarray(W, dtype=np.float64)
    HS = np.asarray(HS, dtype=np.float64)
    if W.shape[1] != HS.shape[0]:
        raise ValidationError("dimension-mismatch", "W and H*S disagree on K")
    total = W @ HS
    nz = total > 0
    masks = []
    for g in groups:
        g = list(g)
        if not g:
            raise ValidationError("empty-group", "every source needs at least one component")
        part = W[:, g] @ HS[g]
        m = np.zeros_like(total)
        m[nz] = part[nz] / total[nz]
        masks.append(m)
    return masks


def wiener_separate(mix_spec: Spectrogram, W, HS, groups) -> list[Spectrogram]:
    """Apply one soft mask per group to the complex mixture."""
    masks = wiener_masks(W, HS, groups)
    if masks[0].shape != mix_spec.coeffs.shape:
        raise ValidationError("dimension-mismatch",
                              f"model rates {masks[0].shape} vs mixture {mix_spec.coeffs.shape}")
    return [replace(mix_spec, coeffs=mix_spec.coeffs * m) for m in masks]


def _pearson(a, b) -> float:
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt(np.dot(a, a) * np.dot(b, b))
    if den == 0:
        return 0.0
    return float(np.dot(a, b) / den)


def match_components(activations, envelopes, candidates=None) -> list[list[int]]:
    """For each reference envelope, the single best-correlated component.

    Correlation is Pearson; constant sequences correlate 0 with anything.
    Ties go to the lower component index.  ``candidates`` restricts the
    search (e.g. to active components).
    """
    A = np.asarray(activations, dtype=np.float64)
    ks = range(A.shape[0]) if candidates is None else sorted(int(k) for k in candidates)
    groups = []
    for env in envelopes:
        env = np.asarray(env, dtype=np.float64)
        if env.shape[0] != A.shape[1]:
            raise ValidationError("dimension-mismatch", "envelope and activations differ in length")
        best, best_r = None, -np.inf
        for k in ks:
            r = _pearson(A[k], env)
            if r > best_r:
                best, best_r = k, r
        groups.append([best])
    return groups


def read_wav(path, sample_rate: float | None = DEFAULT_SAMPLE_RATE):
    """Read a mono float signal, averaging channels and resampling if needed.

    Resampling uses a Kaiser-windowed sinc polyphase filter
    (``scipy.signal.resample_poly``).  Returns ``(signal, sample_rate)``.
    """
    try:
        rate, data = wavfile.read(path)
    except (ValueError, OSError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise FormatError("format-mismatch", f"{path}: {exc}") from exc
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        x = data.astype(np.float64) / 2147483648.0
    elif data.dtype.kind == "f":
        x = data.astype(np.float64)
    else:
        raise FormatError("format-mismatch", f"{path}: unsupported sample type {data.dtype}")
    if x.ndim == 2:
        x = x.mean(axis=1)
    if sample_rate is not None and rate != sample_rate:
        g = gcd(int(rate), int(sample_rate))
        x = resample_poly(x, int(sample_rate) // g, int(rate) // g)
        rate = sample_rate
    return x, rate


def write_wav(path, signal, sample_rate: float = DEFAULT_SAMPLE_RATE, pcm16: bool = False):
    x = np.asarray(signal, dtype=np.float64)
    if pcm16:
        data = np.clip(np.round(x * 32767.0), -32768, 32767).astype(np.int16)
    else:
        data = x.astype(np.float32)
    wavfile.write(path, int(sample_rate), data)
