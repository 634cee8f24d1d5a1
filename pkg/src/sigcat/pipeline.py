"""End-to-end featurization, training and batch classification.

:class:`FeatureCache` memoizes every stage boundary (load, prepare,
preprocess, extract) keyed by the SHA-256 of the sample bytes and the stage
prefix of the configuration, so configurations sharing a prefix share work.
Alongside each value the cache keeps the wall-clock cost of producing it
from raw bytes; classification time charges that cost to the classified
samples whether or not the value was cached.
"""

from __future__ import annotations

import hashlib
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import classify, features, signals
from .classify import ClusteringKind, DistanceKind, DistanceParams, TrainedModel
from .corpus import ClassLabel, Sample
from .errors import EmptyClass, FingerprintMismatch, UnknownLabel
from .features import FeatureKind
from .signals import NGram, PreparationKind, PreprocessKind


@dataclass(frozen=True)
class PipelineConfig:
    loader: NGram = NGram.BIGRAM
    preparation: PreparationKind = PreparationKind.RAW
    preprocess: PreprocessKind = PreprocessKind.RAW
    feature: FeatureKind = FeatureKind.FFT
    distance: DistanceKind = DistanceKind.EUCLIDEAN
    clustering: ClusteringKind = ClusteringKind.NONE
    silence_threshold: float = signals.DEFAULT_SILENCE_THRESHOLD
    minkowski_p: float = classify.DEFAULT_MINKOWSKI_P
    diff_delta: float = classify.DEFAULT_DIFF_DELTA

    def __post_init__(self):
        # accept canonical spellings as well as enum members
        object.__setattr__(self, "loader", NGram(int(self.loader)))
        for name, kind in (("preparation", PreparationKind), ("preprocess", PreprocessKind),
                           ("feature", FeatureKind), ("distance", DistanceKind),
                           ("clustering", ClusteringKind)):
            object.__setattr__(self, name, kind(getattr(self, name)))

    @property
    def fingerprint(self) -> str:
        """Loader, preparation and preprocessing settings; the model's signal provenance."""
        return (f"ngram={int(self.loader)};prep={self.preparation.value};"
                f"thr={self.silence_threshold!r};preproc={self.preprocess.value}")

    @property
    def distance_params(self) -> DistanceParams:
        return DistanceParams(self.minkowski_p, self.diff_delta)

    def label(self) -> str:
        return "/".join([self.preparation.value, self.preprocess.value, self.feature.value,
                         self.distance.value, self.clustering.value])

    @classmethod
    def from_fingerprint(cls, fingerprint: str, **overrides) -> "PipelineConfig":
        try:
            parts = dict(item.split("=", 1) for item in fingerprint.split(";"))
            base = dict(loader=int(parts["ngram"]), preparation=parts["prep"],
                        preprocess=parts["preproc"], silence_threshold=float(parts["thr"]))
        except (KeyError, ValueError) as exc:
            raise FingerprintMismatch(f"unreadable fingerprint {fingerprint!r}") from exc
        base.update(overrides)
        return cls(**base)


BEST_WSDL = PipelineConfig(preparation=PreparationKind.SILENCE, preprocess=PreprocessKind.ENDPOINT,
                           feature=FeatureKind.LPC, distance=DistanceKind.EUCLIDEAN,
                           clustering=ClusteringKind.NONE)
BEST_REST = PipelineConfig(preparation=PreparationKind.SILENCE_NOISE,
                           preprocess=PreprocessKind.ENDPOINT, feature=FeatureKind.MINMAX,
                           distance=DistanceKind.CHEBYSHEV, clustering=ClusteringKind.NONE)


class FeatureCache:
    """Thread-safe stage cache; concurrent writes of one key store equal values."""

    def __init__(self):
        self._store = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._store)

    def get(self, key):
        with self._lock:
            return self._store.get(key)

    def put(self, key, value, cost):
        with self._lock:
            self._store.setdefault(key, (value, cost))
            return self._store[key]

    def clear(self):
        with self._lock:
            self._store.clear()


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _stage(cache, key, compute, base_cost=0.0):
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    start = time.perf_counter()
    value = compute()
    cost = base_cost + (time.perf_counter() - start)
    if cache is not None:
        return cache.put(key, value, cost)
    return value, cost


def featurize_with_cost(sample: Sample, config: PipelineConfig,
                        cache: Optional[FeatureCache] = None):
    """Feature vector plus the seconds it costs to compute from raw bytes."""
    data = sample.data if isinstance(sample, Sample) else bytes(sample)
    digest = _digest(data) if cache is not None else None
    key = (digest, int(config.loader))
    loaded, cost = _stage(cache, key, lambda: signals.load(data, config.loader))
    key += (config.preparation.value, config.silence_threshold)
    prepared, cost = _stage(cache, key, lambda: signals.prepare(
        loaded, config.preparation, config.silence_threshold), cost)
    key += (config.preprocess.value,)
    processed, cost = _stage(cache, key, lambda: signals.preprocess(prepared, config.preprocess), cost)
    key += (config.feature.value,)
    return _stage(cache, key, lambda: features.extract(processed, config.feature), cost)


def featurize(sample: Sample, config: PipelineConfig,
              cache: Optional[FeatureCache] = None) -> np.ndarray:
    return featurize_with_cost(sample, config, cache)[0]


def _check_labeled(samples):
    missing = [s.id for s in samples if s.gold is None]
    if missing:
        raise UnknownLabel(f"training needs labeled samples; {missing[0]!r} has no class")


def featurize_all(samples: Sequence[Sample], config: PipelineConfig,
                  cache: Optional[FeatureCache] = None, jobs: int = 1) -> list:
    """``(vector, cost)`` per sample in input order; ``jobs`` > 1 uses threads."""
    if jobs <= 1 or len(samples) < 2:
        return [featurize_with_cost(s, config, cache) for s in samples]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda s: featurize_with_cost(s, config, cache), samples))


def train_pipeline(samples: Sequence[Sample], config: PipelineConfig,
                   cache: Optional[FeatureCache] = None, jobs: int = 1,
                   classes: Optional[Sequence[ClassLabel]] = tuple(ClassLabel)) -> TrainedModel:
    """Featurize and train. Every label in ``classes`` needs a sample (None: any subset)."""
    _check_labeled(samples)
    if classes is not None:
        absent = sorted(set(classes) - {s.gold for s in samples})
        if absent:
            raise EmptyClass("no training samples for class(es) "
                             + ", ".join(c.spelling for c in absent))
    vectors = [v for v, _ in featurize_all(samples, config, cache, jobs)]
    return classify.train(vectors, [s.gold for s in samples], config.clustering,
                          config.feature, config.fingerprint)


def check_compatible(model: TrainedModel, config: PipelineConfig) -> None:
    if model.fingerprint != config.fingerprint or model.feature_kind is not config.feature:
        raise FingerprintMismatch(
            f"model was trained with {model.fingerprint};fe={model.feature_kind.value}, "
            f"not {config.fingerprint};fe={config.feature.value}")


def classify_batch(samples: Sequence[Sample], model: TrainedModel, config: PipelineConfig,
                   cache: Optional[FeatureCache] = None, jobs: int = 1):
    """Classify in input order; returns ``(results, elapsed_ms)``.

    Elapsed time covers featurizing the samples from their bytes (charged at
    the cached cost on a cache hit) plus the distance search.
    """
    check_compatible(model, config)
    if not samples:
        return [], 0.0
    pairs = featurize_all(samples, config, cache, jobs)
    start = time.perf_counter()
    results = classify.classify_many(np.vstack([v for v, _ in pairs]), model,
                                     config.distance, config.distance_params)
    elapsed = time.perf_counter() - start + sum(c for _, c in pairs)
    return results, elapsed * 1000.0


def with_distance(config: PipelineConfig, distance: DistanceKind) -> PipelineConfig:
    return replace(config, distance=DistanceKind(distance))
