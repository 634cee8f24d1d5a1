"""Byte loading, preparation and preprocessing of amplitude signals.

A signal is a 1-D float64 array. Every public function returns a new array of
length >= 1 and never mutates its input.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import EmptyInput, TooShort

FRAME = 1024
HALF_SPECTRUM = FRAME // 2
DEFAULT_SILENCE_THRESHOLD = 1e-3


class NGram(enum.IntEnum):
    UNIGRAM = 1
    BIGRAM = 2
    TRIGRAM = 3


class PreparationKind(enum.Enum):
    RAW = "raw"
    NOISE = "noise"
    SILENCE = "silence"
    SILENCE_NOISE = "silence-noise"


class PreprocessKind(enum.Enum):
    RAW = "raw"
    NORMALIZE = "norm"
    LOW_PASS = "low"
    HIGH_PASS = "high"
    BAND_PASS = "band"
    BAND_STOP = "bandstop"
    ENDPOINT = "endp"
    NORM_LOW_PASS = "norm-low"
    NORM_ENDPOINT = "norm-endp"


def load(data: bytes, ngram: NGram = NGram.BIGRAM) -> np.ndarray:
    """Slide an n-byte window over ``data`` and map each window to [-1, 1].

    The window is read as an unsigned big-endian integer ``v`` and mapped to
    ``2 v / (256**n - 1) - 1``.
    """
    n = int(ngram)
    raw = np.frombuffer(bytes(data), dtype=np.uint8)
    if raw.size < n:
        raise TooShort(f"{raw.size} byte(s) is too short for a {n}-gram loader")
    count = raw.size - n + 1
    value = np.zeros(count, dtype=np.float64)
    for j in range(n):
        value = value * 256.0 + raw[j:j + count]
    return 2.0 * value / (256.0 ** n - 1.0) - 1.0


def _as_signal(s) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise EmptyInput("a signal must be a non-empty 1-D sequence")
    return s


def remove_silence(s, threshold: float = DEFAULT_SILENCE_THRESHOLD) -> np.ndarray:
    s = _as_signal(s)
    if threshold < 0:
        raise ValueError("silence threshold must be non-negative")
    kept = s[np.abs(s) > threshold]
    if kept.size == 0:
        return np.zeros(1)
    return kept.copy()


# Half-spectrum bin masks over the FRAME // 2 + 1 rfft bins. Band edges are
# exact thirds of HALF_SPECTRUM; together LOW, BAND and HIGH partition the bins.
_BINS = np.arange(HALF_SPECTRUM + 1)
LOW_MASK = _BINS < HALF_SPECTRUM / 3
HIGH_MASK = _BINS >= 2 * HALF_SPECTRUM / 3
BAND_MASK = ~LOW_MASK & ~HIGH_MASK
BAND_STOP_MASK = LOW_MASK | HIGH_MASK
ALL_MASK = np.ones_like(LOW_MASK)


def fft_filter(s, keep) -> np.ndarray:
    """Zero the rfft bins where ``keep`` is false, frame by frame.

    ``keep`` is either a boolean array over the ``FRAME // 2 + 1`` half-spectrum
    bins or a predicate called with the bin index array. Frames of ``FRAME``
    samples do not overlap; the last one is zero-padded and the result is cut
    back to the input length.
    """
    s = _as_signal(s)
    if callable(keep):
        keep = np.asarray(keep(_BINS), dtype=bool)
    keep = np.broadcast_to(np.asarray(keep, dtype=bool), _BINS.shape)
    frames = -(-s.size // FRAME)
    padded = np.zeros(frames * FRAME)
    padded[:s.size] = s
    spectrum = np.fft.rfft(padded.reshape(frames, FRAME), axis=1)
    spectrum[:, ~keep] = 0.0
    out = np.fft.irfft(spectrum, n=FRAME, axis=1).reshape(-1)
    return out[:s.size].copy()


def low_pass(s) -> np.ndarray:
    return fft_filter(s, LOW_MASK)


def high_pass(s) -> np.ndarray:
    return fft_filter(s, HIGH_MASK)


def band_pass(s) -> np.ndarray:
    return fft_filter(s, BAND_MASK)


def band_stop(s) -> np.ndarray:
    return fft_filter(s, BAND_STOP_MASK)


def remove_noise(s) -> np.ndarray:
    # Deliberately the same filter as low_pass; prep=noise with preproc=low
    # filters twice, as scripted sweeps do.
    return low_pass(s)


def prepare(s, kind: PreparationKind,
            silence_threshold: float = DEFAULT_SILENCE_THRESHOLD) -> np.ndarray:
    kind = PreparationKind(kind)
    if kind is PreparationKind.RAW:
        return _as_signal(s).copy()
    if kind is PreparationKind.NOISE:
        return remove_noise(s)
    if kind is PreparationKind.SILENCE:
        return remove_silence(s, silence_threshold)
    # noise filtering opens new near-zero gaps, so silence goes second
    return remove_silence(remove_noise(s), silence_threshold)


def normalize(s) -> np.ndarray:
    s = _as_signal(s)
    peak = np.max(np.abs(s))
    if peak == 0:
        return s.copy()
    return s / peak


def endpoint(s) -> np.ndarray:
    """Keep the first sample, the strict interior local extrema and the last sample."""
    s = _as_signal(s)
    if s.size <= 2:
        return s.copy()
    d = np.diff(s)
    keep = np.ones(s.size, dtype=bool)
    # signs, not the raw product, which can underflow to zero
    direction = np.sign(d)
    keep[1:-1] = direction[:-1] * direction[1:] < 0
    return s[keep]


def preprocess(s, kind: PreprocessKind) -> np.ndarray:
    kind = PreprocessKind(kind)
    if kind is PreprocessKind.RAW:
        return _as_signal(s).copy()
    if kind is PreprocessKind.NORMALIZE:
        return normalize(s)
    if kind is PreprocessKind.LOW_PASS:
        return low_pass(s)
    if kind is PreprocessKind.HIGH_PASS:
        return high_pass(s)
    if kind is PreprocessKind.BAND_PASS:
        return band_pass(s)
    if kind is PreprocessKind.BAND_STOP:
        return band_stop(s)
    if kind is PreprocessKind.ENDPOINT:
        return endpoint(s)
    if kind is PreprocessKind.NORM_LOW_PASS:
        return low_pass(normalize(s))
    return endpoint(normalize(s))
