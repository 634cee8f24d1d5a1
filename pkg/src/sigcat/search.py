"""Exhaustive configuration sweep, ranking and the case matrix."""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from . import classify
from .classify import SWEEP_DISTANCES, ClusteringKind
from .corpus import CtxVariant, DescType, Sample
from .errors import EmptyInput, MissingDataset, ParseError, SigcatError, UnknownLabel
from .evaluation import EvaluationReport, compute_report
from .features import FeatureKind
from .pipeline import FeatureCache, PipelineConfig, featurize_with_cost
from .signals import NGram, PreparationKind, PreprocessKind


def enumerate_configs(clustering: ClusteringKind = ClusteringKind.NONE,
                      base: Optional[PipelineConfig] = None) -> list[PipelineConfig]:
    """The 4 x 9 x 4 x 6 = 864 sweep lattice in lexicographic stage order.

    ``base`` supplies the non-swept parameters (thresholds, Minkowski p, Diff
    delta); the loader is always the bigram loader.
    """
    base = base or PipelineConfig()
    return [replace(base, loader=NGram.BIGRAM, preparation=prep, preprocess=pre,
                    feature=fe, distance=dist, clustering=ClusteringKind(clustering))
            for prep, pre, fe, dist in itertools.product(
                PreparationKind, PreprocessKind, FeatureKind, SWEEP_DISTANCES)]


@dataclass(eq=False)
class SweepRow:
    index: int
    config: PipelineConfig
    report: Optional[EvaluationReport] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.report is not None

    @property
    def status(self) -> str:
        return "ok" if self.ok else "failed"


def _evaluate_group(configs, train, test, timing):
    """Rows for configs sharing one (preparation, preprocess) prefix."""
    cache = FeatureCache()
    # configs in one sub-group share a trained model; only the distance differs
    by_model = {}
    for item in configs:
        cfg = item[1]
        by_model.setdefault((cfg.feature, cfg.clustering, cfg.fingerprint), []).append(item)
    return [row for sub in by_model.values()
            for row in _evaluate_feature(sub, train, test, timing, cache)]


def _evaluate_feature(configs, train, test, timing, cache):
    head = configs[0][1]
    try:
        train_vecs = np.vstack([featurize_with_cost(s, head, cache)[0] for s in train])
        tested = [featurize_with_cost(s, head, cache) for s in test]
        test_vecs = np.vstack([v for v, _ in tested])
        feature_cost = sum(c for _, c in tested)
        model = classify.train(train_vecs, [s.gold for s in train], head.clustering,
                               head.feature, head.fingerprint)
    except (SigcatError, ValueError, FloatingPointError) as exc:
        return [SweepRow(i, cfg, None, f"{type(exc).__name__}: {exc}") for i, cfg in configs]

    expected = [s.gold for s in test]
    rows = []
    for i, cfg in configs:
        try:
            start = time.perf_counter()
            results = classify.classify_many(test_vecs, model, cfg.distance, cfg.distance_params)
            elapsed = (time.perf_counter() - start + feature_cost) * 1000.0
            report = compute_report(expected, [r.label for r in results],
                                    elapsed if timing else 0.0)
            rows.append(SweepRow(i, cfg, report))
        except (SigcatError, ValueError, FloatingPointError) as exc:
            rows.append(SweepRow(i, cfg, None, f"{type(exc).__name__}: {exc}"))
    return rows


_WORKER = {}


def _init_worker(train, test, timing):
    _WORKER.update(train=train, test=test, timing=timing)


def _run_group(configs):
    return _evaluate_group(configs, _WORKER["train"], _WORKER["test"], _WORKER["timing"])


def _groups(configs):
    indexed = list(enumerate(configs))
    key = lambda item: (item[1].preparation, item[1].preprocess)
    groups = {}
    for item in indexed:
        groups.setdefault(key(item), []).append(item)
    return list(groups.values())


def run_sweep(train: Sequence[Sample], test: Sequence[Sample],
              clustering: ClusteringKind = ClusteringKind.NONE, parallelism: int = 1,
              configs: Optional[Sequence[PipelineConfig]] = None,
              timing: bool = True) -> list[SweepRow]:
    """Evaluate every configuration (train on ``train``, score on ``test``).

    Rows come back in enumeration order whatever the parallelism. A
    configuration that raises is recorded as a failed row. With ``timing``
    off, classification times are reported as 0 so the output is
    byte-reproducible.
    """
    if not train or not test:
        raise EmptyInput("sweep needs non-empty training and testing sets")
    configs = list(configs) if configs is not None else enumerate_configs(clustering)
    groups = _groups(configs)
    train, test = list(train), list(test)
    if parallelism <= 1 or len(groups) == 1:
        chunks = [_evaluate_group(g, train, test, timing) for g in groups]
    else:
        with ProcessPoolExecutor(max_workers=parallelism, initializer=_init_worker,
                                 initargs=(train, test, timing)) as pool:
            chunks = list(pool.map(_run_group, groups))
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: r.index)
    return rows


def _rank_key(row: SweepRow):
    if not row.ok:
        return (1, 0.0, 0.0, 0.0, row.index)
    r = row.report
    return (0, -r.total_accuracy, -r.macro_f_measure, r.classification_time_ms, row.index)


def rank_rows(rows: Sequence[SweepRow]) -> list[SweepRow]:
    """Accuracy desc, macro F desc, time asc, enumeration index asc; failures last."""
    if not rows:
        raise EmptyInput("no rows to rank")
    return sorted(rows, key=_rank_key)


SWEEP_COLUMNS = ("index", "prep", "preproc", "feature", "distance", "clustering",
                 "accuracy", "macroP", "macroR", "macroF", "timeMs", "status")


def format_sweep(rows: Sequence[SweepRow]) -> str:
    lines = ["\t".join(SWEEP_COLUMNS)]
    for row in rows:
        c = row.config
        head = [str(row.index), c.preparation.value, c.preprocess.value, c.feature.value,
                c.distance.value, c.clustering.value]
        if row.ok:
            r = row.report
            metrics = [repr(float(x)) for x in (r.total_accuracy, r.macro_precision,
                                                r.macro_recall, r.macro_f_measure,
                                                r.classification_time_ms)]
            status = "ok"
        else:
            metrics = ["-"] * 5
            status = "failed: " + " ".join(row.error.split())
        lines.append("\t".join(head + metrics + [status]))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Case matrix

@dataclass(frozen=True)
class CaseSpec:
    desc_type: DescType
    train_variant: CtxVariant
    test_variant: CtxVariant
    clustering: ClusteringKind

    @property
    def pairing(self) -> str:
        return f"Train{_VARIANT_TITLE[self.train_variant]}Test{_VARIANT_TITLE[self.test_variant]}"


_VARIANT_TITLE = {CtxVariant.PLAIN: "Plain", CtxVariant.PLAIN_CTX: "PlainCtx",
                  CtxVariant.CTX: "Ctx"}
_CLUSTER_TITLE = {ClusteringKind.MEAN: "Mean", ClusteringKind.NONE: "No Clustering",
                  ClusteringKind.MEDIAN: "Median"}

# Column order of the published accuracy grids.
PAIRINGS = (
    (CtxVariant.PLAIN_CTX, CtxVariant.PLAIN_CTX),
    (CtxVariant.PLAIN, CtxVariant.PLAIN),
    (CtxVariant.PLAIN_CTX, CtxVariant.PLAIN),
    (CtxVariant.PLAIN, CtxVariant.PLAIN_CTX),
    (CtxVariant.CTX, CtxVariant.PLAIN_CTX),
    (CtxVariant.CTX, CtxVariant.PLAIN),
)
CLUSTER_ROWS = (ClusteringKind.MEAN, ClusteringKind.NONE, ClusteringKind.MEDIAN)


def standard_cases(desc_types: Sequence[DescType] = (DescType.WSDL, DescType.WADL,
                                                      DescType.HTML, DescType.TEXT)) -> list[CaseSpec]:
    """18 cases (6 pairings x 3 clusterings) per description type."""
    return [CaseSpec(d, tr, te, cl) for d in desc_types for cl in CLUSTER_ROWS
            for tr, te in PAIRINGS]


def parse_cases(text: str) -> list[CaseSpec]:
    cases = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = [f.strip().lower() for f in line.split("\t")]
        if len(fields) != 4:
            raise ParseError(f"expected 4 tab-separated fields, got {len(fields)}", lineno)
        try:
            cases.append(CaseSpec(DescType(fields[0]), CtxVariant(fields[1]),
                                  CtxVariant(fields[2]), ClusteringKind(fields[3])))
        except ValueError as exc:
            raise UnknownLabel(f"line {lineno}: {exc}") from None
    return cases


@dataclass(eq=False)
class CaseResult:
    case: CaseSpec
    best: Optional[SweepRow] = None
    error: Optional[str] = None

    @property
    def accuracy(self) -> Optional[float]:
        if self.best is None or not self.best.ok:
            return None
        return self.best.report.total_accuracy


def split_by_variant(samples: Sequence[Sample]) -> dict:
    out = {}
    for s in samples:
        out.setdefault((s.desc_type, s.ctx_variant), []).append(s)
    return out


def run_case_matrix(cases: Sequence[CaseSpec], train_sets: Mapping, test_sets: Mapping,
                    parallelism: int = 1, base: Optional[PipelineConfig] = None,
                    timing: bool = True) -> list[CaseResult]:
    """Best sweep row per case.

    ``train_sets`` and ``test_sets`` map ``(DescType, CtxVariant)`` to samples.
    A case whose datasets are absent is recorded with a MissingDataset error.
    """
    results = []
    for case in cases:
        train = train_sets.get((case.desc_type, case.train_variant))
        test = test_sets.get((case.desc_type, case.test_variant))
        if not train or not test:
            which = "training" if not train else "testing"
            err = MissingDataset(f"no {which} samples for {case.desc_type.value} "
                                 f"{(case.train_variant if not train else case.test_variant).value}")
            results.append(CaseResult(case, None, str(err)))
            continue
        rows = run_sweep(train, test, case.clustering, parallelism,
                         enumerate_configs(case.clustering, base), timing)
        results.append(CaseResult(case, rank_rows(rows)[0]))
    return results


def format_case_matrix(results: Sequence[CaseResult]) -> str:
    """Clustering x pairing grid of best accuracies (percent), one block per type."""
    blocks = []
    by_type = {}
    for res in results:
        by_type.setdefault(res.case.desc_type, []).append(res)
    for desc, items in by_type.items():
        cells = {(r.case.clustering, r.case.train_variant, r.case.test_variant): r for r in items}
        pairings = [p for p in PAIRINGS if any((cl,) + p in cells for cl in CLUSTER_ROWS)]
        pairings += sorted({(r.case.train_variant, r.case.test_variant) for r in items} - set(pairings),
                           key=lambda p: (p[0].value, p[1].value))
        clusterings = [cl for cl in CLUSTER_ROWS if any((cl,) + p in cells for p in pairings)]
        header = [desc.value] + [CaseSpec(desc, tr, te, ClusteringKind.NONE).pairing
                                 for tr, te in pairings]
        lines = ["\t".join(header)]
        for cl in clusterings:
            row = [_CLUSTER_TITLE[cl]]
            for tr, te in pairings:
                res = cells.get((cl, tr, te))
                if res is None:
                    row.append("")
                elif res.accuracy is None:
                    row.append("missing")
                else:
                    row.append(f"{100 * res.accuracy:.2f}")
            lines.append("\t".join(row))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
