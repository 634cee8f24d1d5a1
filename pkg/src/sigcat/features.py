"""Fixed-length feature vectors from variable-length signals.

FFT and LPC share one framing: 1024-sample Hamming-windowed frames with 50%
overlap, the tail frame zero-padded. Per-frame results are averaged.
"""

from __future__ import annotations

import enum

import numpy as np

from .signals import FRAME, _as_signal

HOP = FRAME // 2
FFT_BINS = 512
LPC_ORDER = 20
MINMAX_SIDE = 50


class FeatureKind(enum.Enum):
    FFT = "fft"
    LPC = "lpc"
    MINMAX = "minmax"
    HYBRID = "hybrid"


FEATURE_LENGTH = {
    FeatureKind.FFT: FFT_BINS,
    FeatureKind.LPC: LPC_ORDER,
    FeatureKind.MINMAX: 2 * MINMAX_SIDE,
    FeatureKind.HYBRID: FFT_BINS + LPC_ORDER,
}

_WINDOW = np.hamming(FRAME)


def frames(s) -> np.ndarray:
    """Split into overlapping windowed frames, shape ``(n_frames, FRAME)``."""
    s = _as_signal(s)
    count = 1 if s.size <= FRAME else 1 + -(-(s.size - FRAME) // HOP)
    padded = np.zeros((count - 1) * HOP + FRAME)
    padded[:s.size] = s
    idx = np.arange(count)[:, None] * HOP + np.arange(FRAME)[None, :]
    return padded[idx] * _WINDOW


def extract_fft(s) -> np.ndarray:
    spectrum = np.abs(np.fft.rfft(frames(s), axis=1))[:, :FFT_BINS]
    return spectrum.mean(axis=0)


def levinson_durbin(r, order: int = LPC_ORDER) -> np.ndarray:
    """Predictor coefficients ``a`` with ``x[t] ~ sum_k a[k] x[t-1-k]``.

    ``r`` holds autocorrelation lags ``0..order``. A zero lag 0 gives all-zero
    coefficients; if the prediction error collapses to zero (a perfectly
    predictable frame) the recursion stops and higher orders stay zero.
    """
    r = np.asarray(r, dtype=np.float64)
    a = np.zeros(order)
    if r[0] <= 0:
        return a
    err = r[0]
    for i in range(order):
        k = (r[i + 1] - np.dot(a[:i], r[i:0:-1])) / err
        a[:i] = a[:i] - k * a[:i][::-1]
        a[i] = k
        err *= 1.0 - k * k
        if err <= r[0] * 1e-15:
            break
    return a


def autocorrelation(frame, lags: int = LPC_ORDER) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    n = frame.size
    return np.array([np.dot(frame[:n - k], frame[k:]) for k in range(lags + 1)])


def extract_lpc(s) -> np.ndarray:
    coeffs = [levinson_durbin(autocorrelation(f)) for f in frames(s)]
    return np.mean(coeffs, axis=0)


def extract_minmax(s) -> np.ndarray:
    """50 smallest then 50 largest amplitudes, each half ascending, zero-filled."""
    s = np.sort(_as_signal(s))
    side = min(MINMAX_SIDE, s.size)
    out = np.zeros(2 * MINMAX_SIDE)
    out[:side] = s[:side]
    out[MINMAX_SIDE:MINMAX_SIDE + side] = s[s.size - side:]
    return out


def extract(s, kind: FeatureKind) -> np.ndarray:
    kind = FeatureKind(kind)
    if kind is FeatureKind.FFT:
        return extract_fft(s)
    if kind is FeatureKind.LPC:
        return extract_lpc(s)
    if kind is FeatureKind.MINMAX:
        return extract_minmax(s)
    return np.concatenate([extract_fft(s), extract_lpc(s)])
