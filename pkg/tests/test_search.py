import numpy as np
import pytest

from sigcat import search
from sigcat.classify import SWEEP_DISTANCES, ClusteringKind, DistanceKind
from sigcat.corpus import CtxVariant, DescType
from sigcat.errors import EmptyInput, ParseError
from sigcat.evaluation import report_from_matrix
from sigcat.features import FeatureKind
from sigcat.pipeline import PipelineConfig
from sigcat.search import CaseSpec, SweepRow, enumerate_configs, rank_rows, run_sweep
from sigcat.signals import NGram, PreparationKind, PreprocessKind
from sigcat.synthetic import separable_corpus

from conftest import make_sample


def small_lattice(clustering=ClusteringKind.NONE):
    """A slice of the lattice spanning several (prep, preproc) groups."""
    keep_prep = {PreparationKind.RAW, PreparationKind.SILENCE}
    keep_pre = {PreprocessKind.RAW, PreprocessKind.NORMALIZE, PreprocessKind.ENDPOINT}
    return [c for c in enumerate_configs(clustering)
            if c.preparation in keep_prep and c.preprocess in keep_pre
            and c.feature in (FeatureKind.MINMAX, FeatureKind.LPC)]


@pytest.mark.parametrize("clustering", list(ClusteringKind))
def test_lattice_shape(clustering):
    configs = enumerate_configs(clustering)
    assert len(configs) == 864 == 4 * 9 * 4 * 6
    assert len(set(configs)) == 864
    assert all(c.loader is NGram.BIGRAM and c.clustering is clustering for c in configs)
    first = configs[0]
    assert (first.preparation, first.preprocess, first.feature, first.distance) == \
        (PreparationKind.RAW, PreprocessKind.RAW, FeatureKind.FFT, DistanceKind.CHEBYSHEV)
    assert DistanceKind.COSINE not in {c.distance for c in configs}


def test_lattice_order_is_lexicographic():
    configs = enumerate_configs()
    order = [tuple(list(kind).index(getattr(c, f)) for f, kind in
                   (("preparation", PreparationKind), ("preprocess", PreprocessKind),
                    ("feature", FeatureKind)))
             + (SWEEP_DISTANCES.index(c.distance),) for c in configs]
    assert order == sorted(order)


def test_lattice_keeps_base_parameters():
    base = PipelineConfig(silence_threshold=0.01, minkowski_p=4.0)
    assert all(c.silence_threshold == 0.01 and c.minkowski_p == 4.0
               for c in enumerate_configs(ClusteringKind.MEAN, base))


def row(i, acc, f=0.5, t=1.0):
    r = report_from_matrix(np.eye(5, dtype=int))
    r.total_accuracy, r.macro_f_measure, r.classification_time_ms = acc, f, t
    return SweepRow(i, PipelineConfig(), r)


def test_rank_example():
    rows = [row(0, 0.5, t=10), row(1, 0.9, t=20), row(2, 0.9, t=5)]
    assert [r.index for r in rank_rows(rows)] == [2, 1, 0]
    assert rank_rows(rows[:1])[0] is rows[0]
    with pytest.raises(EmptyInput):
        rank_rows([])


def test_rank_chain_and_failures():
    rows = [SweepRow(0, PipelineConfig(), None, "boom"), row(1, 0.8, f=0.7),
            row(2, 0.8, f=0.9), row(3, 0.8, f=0.9), row(4, 0.8, f=0.9, t=0.5)]
    ranked = rank_rows(rows)
    assert [r.index for r in ranked] == [4, 2, 3, 1, 0]
    assert sorted(map(id, ranked)) == sorted(map(id, rows))


def test_separable_sweep_slice():
    train = separable_corpus(60, seed=1)
    test = separable_corpus(40, seed=2)
    configs = small_lattice()
    rows = run_sweep(train, test, configs=configs, timing=False)
    assert len(rows) == len(configs)
    assert [r.index for r in rows] == list(range(len(configs)))
    assert all(r.ok for r in rows)
    best = rank_rows(rows)[0]
    assert best.report.total_accuracy == 1.0


def test_sweep_rows_match_single_runs():
    from sigcat.evaluation import evaluate
    train = separable_corpus(30, seed=3)
    test = separable_corpus(20, seed=4)
    configs = small_lattice(ClusteringKind.MEDIAN)[::7]
    for r in run_sweep(train, test, configs=configs, timing=False):
        assert r.report == evaluate(train, test, r.config, timing=False)


def test_parallelism_invariance():
    train = separable_corpus(30, seed=5)
    test = separable_corpus(20, seed=6)
    configs = small_lattice(ClusteringKind.MEAN)
    one = search.format_sweep(run_sweep(train, test, configs=configs, timing=False))
    two = search.format_sweep(run_sweep(train, test, parallelism=2, configs=configs,
                                        timing=False))
    assert one == two


def test_mixed_clustering_configs():
    train = separable_corpus(20, seed=7)
    test = separable_corpus(10, seed=8)
    cfgs = [PipelineConfig(feature="fft", clustering=c) for c in ClusteringKind]
    rows = run_sweep(train, test, configs=cfgs, timing=False)
    from sigcat.evaluation import evaluate
    for r in rows:
        assert r.report == evaluate(train, test, r.config, timing=False)


def test_failures_are_recorded():
    train = separable_corpus(10, seed=1)
    test = [make_sample("tiny", b"x")]
    rows = run_sweep(train, test, configs=small_lattice()[:12])
    assert len(rows) == 12 and not any(r.ok for r in rows)
    assert all("TooShort" in r.error for r in rows)
    text = search.format_sweep(rows)
    assert text.splitlines()[1].split("\t")[6:11] == ["-"] * 5
    assert text.splitlines()[1].split("\t")[11].startswith("failed: TooShort")


def test_sweep_columns():
    rows = run_sweep(separable_corpus(10), separable_corpus(5, seed=9),
                     configs=enumerate_configs()[:6], timing=False)
    lines = search.format_sweep(rows).splitlines()
    assert lines[0].split("\t") == list(search.SWEEP_COLUMNS)
    assert lines[1].split("\t")[:6] == ["0", "raw", "raw", "fft", "cheb", "none"]
    assert lines[1].endswith("\tok")


def test_standard_cases():
    cases = search.standard_cases([DescType.WSDL])
    assert len(cases) == 18 and len(set(cases)) == 18
    assert cases[0].pairing == "TrainPlainCtxTestPlainCtx"
    assert len(search.standard_cases()) == 72


def test_parse_cases():
    text = "# type\ttrain\ttest\tclustering\nwsdl\tplain\tplainctx\tmean\n\nWADL\tctx\tplain\tnone\n"
    assert search.parse_cases(text) == [
        CaseSpec(DescType.WSDL, CtxVariant.PLAIN, CtxVariant.PLAIN_CTX, ClusteringKind.MEAN),
        CaseSpec(DescType.WADL, CtxVariant.CTX, CtxVariant.PLAIN, ClusteringKind.NONE)]
    with pytest.raises(ParseError):
        search.parse_cases("wsdl\tplain\tmean\n")


@pytest.fixture
def tiny_lattice(monkeypatch):
    real = search.enumerate_configs
    monkeypatch.setattr(search, "enumerate_configs",
                        lambda clustering=ClusteringKind.NONE, base=None: [
                            c for c in real(clustering, base)
                            if c.preparation is PreparationKind.RAW
                            and c.preprocess is PreprocessKind.RAW
                            and c.feature is FeatureKind.MINMAX])


def test_case_matrix_cells(tiny_lattice):
    sets = {}
    for variant in CtxVariant:
        sets[(DescType.WSDL, variant)] = [
            make_sample(f"{variant.value}-{s.id}", s.data, s.gold, DescType.WSDL, variant)
            for s in separable_corpus(15, seed=len(variant.value))]
    cases = search.standard_cases([DescType.WSDL])
    results = search.run_case_matrix(cases, sets, sets, timing=False)
    assert len(results) == 18
    assert all(r.accuracy == 1.0 for r in results)
    grid = search.format_case_matrix(results).splitlines()
    assert len(grid) == 4
    assert grid[0].split("\t")[1:] == [CaseSpec(DescType.WSDL, a, b, ClusteringKind.NONE).pairing
                                       for a, b in search.PAIRINGS]
    assert grid[2].split("\t") == ["No Clustering"] + ["100.00"] * 6


def test_case_matrix_missing(tiny_lattice):
    plain = [make_sample(s.id, s.data, s.gold, DescType.WSDL) for s in separable_corpus(10)]
    sets = {(DescType.WSDL, CtxVariant.PLAIN): plain}
    cases = [CaseSpec(DescType.WSDL, CtxVariant.PLAIN, CtxVariant.PLAIN, ClusteringKind.NONE),
             CaseSpec(DescType.WSDL, CtxVariant.PLAIN_CTX, CtxVariant.PLAIN, ClusteringKind.NONE)]
    results = search.run_case_matrix(cases, sets, sets, timing=False)
    assert results[0].accuracy == 1.0
    assert results[1].accuracy is None and "MissingDataset" not in results[1].error
    assert "plainctx" in results[1].error
    grid = search.format_case_matrix(results)
    assert "missing" in grid
