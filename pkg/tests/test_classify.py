import struct
import zlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from sigcat import classify
from sigcat.classify import (ClusteringKind, DistanceKind, DistanceParams, TrainedModel,
                             classify_one, distance, dump_model, parse_model)
from sigcat.corpus import ClassLabel
from sigcat.errors import (CorruptModel, EmptyClass, FormatVersionMismatch,
                           LengthMismatch)
from sigcat.features import FeatureKind

W, S, T, E, F = ClassLabel
ALL_KINDS = list(DistanceKind)


def reference_distance(a, b, kind, p=3.0, delta=1e-4, var=None):
    """Scalar loops, kept apart from the vectorized implementation."""
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    d = [abs(x - y) for x, y in zip(a, b)]
    if kind is DistanceKind.CHEBYSHEV:
        return max(d)
    if kind is DistanceKind.EUCLIDEAN:
        return sum(x * x for x in d) ** 0.5
    if kind is DistanceKind.MINKOWSKI:
        return sum(x ** p for x in d) ** (1 / p)
    if kind is DistanceKind.MAHALANOBIS:
        var = [1.0] * len(a) if var is None else var
        return sum(x * x / max(v, 1e-6) for x, v in zip(d, var)) ** 0.5
    if kind is DistanceKind.DIFF:
        return sum(x for x in d if x > delta)
    if kind is DistanceKind.HAMMING:
        return float(sum(1 for x in d if x > delta))
    na = sum(x * x for x in a) ** 0.5
    nb = sum(x * x for x in b) ** 0.5
    if na == 0 or nb == 0:
        return 1.0
    return 1 - sum(x * y for x, y in zip(a, b)) / (na * nb)


def test_distance_examples():
    assert distance([0, 0], [3, 4], DistanceKind.CHEBYSHEV) == 4
    assert distance([0, 0], [3, 4], DistanceKind.EUCLIDEAN) == 5
    assert distance([0, 0], [3, 4], DistanceKind.MINKOWSKI) == pytest.approx(4.49794, abs=1e-5)
    assert distance([1, 0], [0, 1], DistanceKind.COSINE) == pytest.approx(1.0, abs=1e-12)
    assert abs(distance([2, 5, 1], [2, 5, 1], DistanceKind.COSINE)) < 1e-12
    assert distance([1, 2, 3], [1, 2, 4], DistanceKind.HAMMING) == 1
    assert distance([1, 2, 3], [1, 2, 4], DistanceKind.DIFF) == 1.0
    assert distance([0, 0], [1, 2], DistanceKind.COSINE) == 1.0
    assert distance([0, 0], [0, 0], DistanceKind.COSINE) == 1.0


def test_distance_length_mismatch():
    with pytest.raises(LengthMismatch):
        distance([1, 2], [1, 2, 3], DistanceKind.EUCLIDEAN)


def test_diff_threshold_is_strict():
    assert distance([0.0], [1e-4], DistanceKind.HAMMING) == 0
    assert distance([0.0], [2e-4], DistanceKind.HAMMING) == 1
    params = DistanceParams(diff_delta=0.5)
    assert distance([0, 0], [0.4, 0.6], DistanceKind.DIFF, params) == pytest.approx(0.6)


def test_mahalanobis_uses_variance_and_floor():
    params = DistanceParams(variance=np.array([4.0, 0.0]))
    # second dimension floors at 1e-6
    expected = np.sqrt(4 / 4 + 1e-6 / 1e-6)
    assert distance([0, 0], [2, 1e-3], DistanceKind.MAHALANOBIS, params) == pytest.approx(expected)
    assert distance([0, 0], [3, 4], DistanceKind.MAHALANOBIS) == 5


def test_vectorized_matches_reference(rng):
    var = rng.uniform(0, 2, 16)
    params = DistanceParams(variance=var)
    for _ in range(100):
        a, b = rng.normal(size=(2, 16))
        b[:3] = a[:3]
        for kind in ALL_KINDS:
            got = distance(a, b, kind, params)
            want = reference_distance(a, b, kind, var=var)
            assert got == pytest.approx(want, abs=1e-10, rel=1e-10), kind


vec = arrays(np.float64, 8, elements=st.floats(-100, 100, allow_nan=False))


@settings(max_examples=60)
@given(vec, vec, st.sampled_from(ALL_KINDS))
def test_symmetry_and_identity(a, b, kind):
    assert distance(a, b, kind) == pytest.approx(distance(b, a, kind), abs=1e-12)
    assert distance(a, b, kind) >= -1e-12
    if kind is not DistanceKind.COSINE or np.any(a != 0):
        assert abs(distance(a, a, kind)) < 1e-12


def test_minkowski_limits(rng):
    for _ in range(50):
        a, b = rng.normal(size=(2, 20))
        p2 = distance(a, b, DistanceKind.MINKOWSKI, DistanceParams(minkowski_p=2))
        assert p2 == pytest.approx(distance(a, b, DistanceKind.EUCLIDEAN), abs=1e-9)
        p64 = distance(a, b, DistanceKind.MINKOWSKI, DistanceParams(minkowski_p=64))
        cheb = distance(a, b, DistanceKind.CHEBYSHEV)
        assert abs(p64 - cheb) <= 0.05 * cheb


def test_train_examples():
    m = classify.train([[0, 0], [2, 2]], [W, W], ClusteringKind.MEAN)
    np.testing.assert_array_equal(m.per_class[W], [[1, 1]])
    m = classify.train([[0], [2], [10]], [W, W, W], ClusteringKind.MEDIAN)
    np.testing.assert_array_equal(m.per_class[W], [[2]])
    m = classify.train([[0], [2], [10], [11]], [W] * 4, ClusteringKind.MEDIAN)
    np.testing.assert_array_equal(m.per_class[W], [[6]])
    m = classify.train(np.arange(14).reshape(7, 2), [W, S, W, S, W, S, W], ClusteringKind.NONE)
    assert sum(v.shape[0] for v in m.per_class.values()) == 7
    assert m.labels == [W, S]


def test_train_errors():
    with pytest.raises(EmptyClass):
        classify.train([], [], ClusteringKind.MEAN)
    with pytest.raises(LengthMismatch):
        classify.train([[1, 2], [1, 2, 3]], [W, S], ClusteringKind.NONE)
    with pytest.raises(LengthMismatch):
        classify.train([[1, 2]], [W, S], ClusteringKind.NONE)


def test_pooled_variance():
    vectors = np.array([[0.0, 1.0], [2.0, 1.0], [10.0, 5.0], [14.0, 5.0]])
    owner = np.array([0, 0, 1, 1])
    # within-class squared deviations: dim0 2 + 8 = 10, dim1 0; dof = 4 - 2
    np.testing.assert_allclose(classify.pooled_variance(vectors, owner), [5.0, 1e-6])


def test_classify_examples():
    model = classify.train([[0, 0], [10, 10]], [W, S], ClusteringKind.NONE)
    r = classify_one([1, 1], model, DistanceKind.EUCLIDEAN)
    assert r.label is W and r.score == pytest.approx(np.sqrt(2))
    assert r.per_class_best[S] == pytest.approx(np.sqrt(162))
    r = classify_one([10, 10], model, DistanceKind.EUCLIDEAN)
    assert r.label is S and r.score == 0


def test_tie_goes_to_lower_ordinal():
    model = classify.train([[4, 0], [-4, 0], [0, 4]], [F, E, T], ClusteringKind.MEAN)
    for kind in ALL_KINDS:
        if kind is DistanceKind.COSINE:
            continue
        assert classify_one([0, 0], model, kind).label is T, kind
    model = classify.train([[1, 0], [0, 1]], [S, W], ClusteringKind.NONE)
    assert classify_one([1, 1], model, DistanceKind.COSINE).label is W


def test_scale_invariance_of_winner(rng):
    kinds = [DistanceKind.CHEBYSHEV, DistanceKind.EUCLIDEAN, DistanceKind.MINKOWSKI,
             DistanceKind.COSINE]
    for _ in range(30):
        vectors = rng.normal(size=(15, 6))
        labels = [ClassLabel(i % 5) for i in range(15)]
        q = rng.normal(size=6)
        lam = float(rng.uniform(0.01, 100))
        base = classify.train(vectors, labels, ClusteringKind.NONE)
        scaled = classify.train(vectors * lam, labels, ClusteringKind.NONE)
        for kind in kinds:
            assert classify_one(q, base, kind).label is classify_one(q * lam, scaled, kind).label


def test_one_nn_self_match(rng):
    vectors = rng.normal(size=(25, 10))
    labels = [ClassLabel(i % 5) for i in range(25)]
    model = classify.train(vectors, labels, ClusteringKind.NONE)
    for kind in ALL_KINDS:
        for v, c in zip(vectors, labels):
            r = classify_one(v, model, kind)
            assert r.label is c and abs(r.score) < 1e-12


@pytest.mark.parametrize("clustering", [ClusteringKind.MEAN, ClusteringKind.MEDIAN])
def test_nearest_centroid_oracle(rng, clustering):
    for _ in range(20):
        n = int(rng.integers(5, 20))
        vectors = rng.normal(size=(n, 4))
        labels = [ClassLabel(int(x)) for x in rng.integers(0, 5, n)]
        model = classify.train(vectors, labels, clustering)
        present = sorted(set(labels))
        agg = np.mean if clustering is ClusteringKind.MEAN else np.median
        owner = np.array([int(c) for c in labels])
        centroids = {c: agg(vectors[owner == int(c)], axis=0) for c in present}
        for q in rng.normal(size=(5, 4)):
            for kind in ALL_KINDS:
                d = {c: reference_distance(q, centroids[c], kind, var=model.variance)
                     for c in present}
                best = min(d.values())
                # ties resolve to the lowest ordinal among near-equal scores
                want = min(c for c in present if d[c] <= best + 1e-12)
                r = classify_one(q, model, kind)
                assert r.label is want, kind
                assert r.score == pytest.approx(best, abs=1e-9)


def random_model(rng, clustering=None):
    clustering = clustering or ClusteringKind(rng.choice([k.value for k in ClusteringKind]))
    dim = int(rng.integers(1, 40))
    classes = sorted(rng.choice(5, size=int(rng.integers(1, 6)), replace=False))
    vectors, labels = [], []
    for c in classes:
        for _ in range(int(rng.integers(1, 5))):
            vectors.append(rng.normal(size=dim) * 10 ** rng.uniform(-5, 5))
            labels.append(ClassLabel(int(c)))
    kind = FeatureKind(rng.choice([k.value for k in FeatureKind]))
    return classify.train(vectors, labels, clustering, kind, f"ngram=2;seed={rng.integers(1e9)}")


def test_round_trip(tmp_path, rng):
    for i in range(20):
        model = random_model(rng)
        path = tmp_path / f"m{i}.sgcm"
        classify.save_model(model, path)
        back = classify.load_model(path)
        assert back == model
        for c in model.labels:
            assert back.per_class[c].tobytes() == model.per_class[c].tobytes()
        assert back.variance.tobytes() == model.variance.tobytes()


def test_model_without_variance_round_trips():
    model = TrainedModel({W: np.array([[1.0, 2.0]])}, ClusteringKind.MEAN, FeatureKind.LPC, "x")
    assert parse_model(dump_model(model)) == model


def test_truncated_and_corrupted(rng):
    blob = dump_model(random_model(rng))
    for cut in (0, 3, 10, len(blob) // 2, len(blob) - 1):
        with pytest.raises(CorruptModel):
            parse_model(blob[:cut])
    flipped = bytearray(blob)
    flipped[len(blob) // 2] ^= 0x10
    with pytest.raises(CorruptModel):
        parse_model(bytes(flipped))
    with pytest.raises(CorruptModel):
        parse_model(b"JUNK" + blob[4:])


def test_newer_version(rng):
    blob = bytearray(dump_model(random_model(rng)))
    struct.pack_into("<H", blob, 4, classify.FORMAT_VERSION + 1)
    body = bytes(blob[:-4])
    blob = body + struct.pack("<I", zlib.crc32(body))
    with pytest.raises(FormatVersionMismatch):
        parse_model(blob)


def test_layout_is_documented(rng):
    model = random_model(rng, ClusteringKind.MEAN)
    blob = dump_model(model)
    assert blob[:4] == b"SGCM"
    version, head_len = struct.unpack_from("<HI", blob, 4)
    assert version == 1
    assert struct.unpack("<I", blob[-4:])[0] == zlib.crc32(blob[:-4])
    first = model.labels[0]
    start = 10 + head_len
    np.testing.assert_array_equal(
        np.frombuffer(blob[start:start + 8 * model.dimension], "<f8"), model.per_class[first][0])


def test_model_validation():
    with pytest.raises(EmptyClass):
        TrainedModel({}, ClusteringKind.NONE, FeatureKind.FFT)
    with pytest.raises(CorruptModel):
        TrainedModel({W: np.zeros((2, 3))}, ClusteringKind.MEAN, FeatureKind.FFT)
    with pytest.raises(LengthMismatch):
        TrainedModel({W: np.zeros((1, 3)), S: np.zeros((1, 2))}, ClusteringKind.MEAN,
                     FeatureKind.FFT)
