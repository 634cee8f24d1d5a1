"""Confusion matrices, macro metrics and cross-validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .corpus import ClassLabel, Sample
from .errors import EmptyInput, InvalidK, LengthMismatch, TooFewSamples
from .pipeline import FeatureCache, PipelineConfig, classify_batch, train_pipeline

N_CLASSES = len(ClassLabel)


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f_measure: float


@dataclass(eq=False)
class EvaluationReport:
    matrix: np.ndarray
    total_accuracy: float
    per_class: dict
    macro_precision: float
    macro_recall: float
    macro_f_measure: float
    classification_time_ms: float = 0.0
    folds: list = field(default_factory=list)

    @property
    def total(self) -> int:
        return int(self.matrix.sum())

    def metrics(self) -> tuple:
        return (self.total_accuracy, self.macro_precision, self.macro_recall,
                self.macro_f_measure, self.classification_time_ms)

    def __eq__(self, other):
        if not isinstance(other, EvaluationReport):
            return NotImplemented
        return (np.array_equal(self.matrix, other.matrix) and self.metrics() == other.metrics()
                and self.per_class == other.per_class and self.folds == other.folds)


def confusion_matrix(expected: Sequence[ClassLabel], predicted: Sequence[ClassLabel]) -> np.ndarray:
    matrix = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for e, p in zip(expected, predicted):
        matrix[int(e), int(p)] += 1
    return matrix


def report_from_matrix(matrix: np.ndarray, elapsed_ms: float = 0.0) -> EvaluationReport:
    """Metrics of a confusion matrix (rows expected, columns predicted).

    Precision is 0 for a class never predicted. Classes with no expected
    samples are left out of the macro averages, and macro F is the mean of
    the per-class F values rather than the harmonic mean of macro P and R.
    """
    matrix = np.asarray(matrix, dtype=np.int64)
    total = int(matrix.sum())
    if total == 0:
        raise EmptyInput("empty confusion matrix")
    expected = matrix.sum(axis=1)
    predicted = matrix.sum(axis=0)
    per_class = {}
    for c in ClassLabel:
        correct = int(matrix[c, c])
        p = correct / predicted[c] if predicted[c] else 0.0
        r = correct / expected[c] if expected[c] else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        per_class[c] = ClassScores(float(p), float(r), float(f))
    present = [c for c in ClassLabel if expected[c] > 0]
    return EvaluationReport(
        matrix=matrix,
        total_accuracy=int(np.trace(matrix)) / total,
        per_class=per_class,
        macro_precision=float(np.mean([per_class[c].precision for c in present])),
        macro_recall=float(np.mean([per_class[c].recall for c in present])),
        macro_f_measure=float(np.mean([per_class[c].f_measure for c in present])),
        classification_time_ms=float(elapsed_ms),
    )


def compute_report(expected: Sequence[ClassLabel], predicted: Sequence[ClassLabel],
                   elapsed_ms: float = 0.0) -> EvaluationReport:
    if len(expected) != len(predicted):
        raise LengthMismatch(f"{len(expected)} expected vs {len(predicted)} predicted labels")
    if len(expected) == 0:
        raise EmptyInput("nothing to evaluate")
    return report_from_matrix(confusion_matrix(expected, predicted), elapsed_ms)


def average_reports(reports: Sequence[EvaluationReport]) -> EvaluationReport:
    """Summed matrix and time; per-class and macro metrics averaged over reports."""
    if not reports:
        raise EmptyInput("no reports to average")
    n = len(reports)
    per_class = {}
    for c in ClassLabel:
        per_class[c] = ClassScores(*(sum(getattr(r.per_class[c], name) for r in reports) / n
                                     for name in ("precision", "recall", "f_measure")))
    return EvaluationReport(
        matrix=sum(r.matrix for r in reports),
        total_accuracy=sum(r.total_accuracy for r in reports) / n,
        per_class=per_class,
        macro_precision=sum(r.macro_precision for r in reports) / n,
        macro_recall=sum(r.macro_recall for r in reports) / n,
        macro_f_measure=sum(r.macro_f_measure for r in reports) / n,
        classification_time_ms=sum(r.classification_time_ms for r in reports),
        folds=list(reports),
    )


def pooled(report: EvaluationReport) -> EvaluationReport:
    """Metrics recomputed from the (summed) confusion matrix of ``report``."""
    return report_from_matrix(report.matrix, report.classification_time_ms)


def evaluate(train: Sequence[Sample], test: Sequence[Sample], config: PipelineConfig,
             cache: Optional[FeatureCache] = None, timing: bool = True,
             jobs: int = 1) -> EvaluationReport:
    # score whatever classes the training side holds; small folds may lack one
    model = train_pipeline(train, config, cache, jobs, classes=None)
    results, elapsed = classify_batch(test, model, config, cache, jobs)
    return compute_report([s.gold for s in test], [r.label for r in results],
                          elapsed if timing else 0.0)


def make_folds(labels: Sequence[ClassLabel], k: int, seed: int) -> list[np.ndarray]:
    """Stratified fold assignment; returns the sorted test indices of each fold.

    Each class's indices are shuffled with a generator seeded by ``seed``;
    the per-class lists are concatenated in class order and dealt round-robin,
    so fold sizes differ by at most one and every class is spread evenly.
    """
    if k < 2:
        raise InvalidK(f"k must be at least 2, got {k}")
    if len(labels) < k:
        raise TooFewSamples(f"{len(labels)} samples cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    owner = np.array([int(c) for c in labels])
    order = []
    for c in sorted(set(owner.tolist())):
        idx = np.flatnonzero(owner == c)
        order.extend(rng.permutation(idx).tolist())
    fold_of = np.empty(len(labels), dtype=np.int64)
    fold_of[np.array(order)] = np.arange(len(order)) % k
    return [np.flatnonzero(fold_of == f) for f in range(k)]


def cross_validate(samples: Sequence[Sample], k: int, seed: int, config: PipelineConfig,
                   cache: Optional[FeatureCache] = None, timing: bool = True,
                   jobs: int = 1) -> EvaluationReport:
    """Stratified k-fold cross-validation of one configuration.

    The returned report holds fold-averaged metrics, the summed confusion
    matrix and the summed classification time; ``folds`` keeps the per-fold
    reports and :func:`pooled` gives matrix-level metrics.
    """
    samples = list(samples)
    folds = make_folds([s.gold for s in samples], k, seed)
    cache = cache if cache is not None else FeatureCache()
    reports = []
    for test_idx in folds:
        held = set(test_idx.tolist())
        train = [s for i, s in enumerate(samples) if i not in held]
        test = [samples[i] for i in test_idx]
        reports.append(evaluate(train, test, config, cache, timing, jobs))
    return average_reports(reports)


def two_fold_swap(samples_a: Sequence[Sample], samples_b: Sequence[Sample],
                  config: PipelineConfig, cache: Optional[FeatureCache] = None,
                  timing: bool = True, jobs: int = 1) -> EvaluationReport:
    """Train on A and test on B, then the reverse; the two reports are averaged."""
    if not samples_a or not samples_b:
        raise EmptyInput("both sample sets must be non-empty")
    cache = cache if cache is not None else FeatureCache()
    first = evaluate(samples_a, samples_b, config, cache, timing, jobs)
    second = evaluate(samples_b, samples_a, config, cache, timing, jobs)
    avg = average_reports([first, second])
    avg.folds = []
    return avg


# --------------------------------------------------------------------------
# Serialization

REPORT_COLUMNS = ("config", "accuracy", "macroP", "macroR", "macroF", "timeMs")


def _num(x: float) -> str:
    return repr(float(x))


def format_report(report: EvaluationReport, config_label: str = "") -> str:
    """Key-value text: summary metrics, per-class scores and the confusion matrix."""
    lines = []
    if config_label:
        lines.append(f"config\t{config_label}")
    lines += [
        f"samples\t{report.total}",
        f"accuracy\t{_num(report.total_accuracy)}",
        f"macroP\t{_num(report.macro_precision)}",
        f"macroR\t{_num(report.macro_recall)}",
        f"macroF\t{_num(report.macro_f_measure)}",
        f"timeMs\t{_num(report.classification_time_ms)}",
    ]
    if report.folds:
        lines.append(f"folds\t{len(report.folds)}")
        lines.append(f"pooledAccuracy\t{_num(pooled(report).total_accuracy)}")
    for c in ClassLabel:
        s = report.per_class[c]
        lines.append(f"class.{c.spelling}\t{_num(s.precision)}\t{_num(s.recall)}\t{_num(s.f_measure)}")
    for c in ClassLabel:
        lines.append(f"matrix.{c.spelling}\t" + "\t".join(str(int(x)) for x in report.matrix[c]))
    return "\n".join(lines) + "\n"


def format_report_row(report: EvaluationReport, config_label: str, header: bool = False) -> str:
    row = "\t".join([config_label, _num(report.total_accuracy), _num(report.macro_precision),
                     _num(report.macro_recall), _num(report.macro_f_measure),
                     _num(report.classification_time_ms)])
    return ("\t".join(REPORT_COLUMNS) + "\n" if header else "") + row + "\n"
