import sys

import numpy as np
import pytest

from sigcat.corpus import ClassLabel, CtxVariant, DescType, Sample


def naive_dft(x):
    """O(N^2) DFT by explicit summation, independent of numpy.fft."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x


def naive_idft(X):
    X = np.asarray(X, dtype=np.complex128)
    n = X.size
    k = np.arange(n)
    return (np.exp(2j * np.pi * np.outer(k, k) / n) @ X) / n


def naive_filter_frame(frame, keep_half):
    """Zero DFT bins outside ``keep_half`` (indexed by min(k, N-k)) and invert."""
    n = frame.size
    X = naive_dft(frame)
    half = np.minimum(np.arange(n), n - np.arange(n))
    X[~keep_half[half]] = 0
    return naive_idft(X).real


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_sample(sid, data, label=ClassLabel.WEATHER, desc=DescType.TEXT,
                variant=CtxVariant.PLAIN):
    return Sample(sid, data, desc, variant, label, "")


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.RESULTS:
        terminalreporter.write_line(line)
