"""Command-line front end.

Results go to stdout (or ``-o``), diagnostics to stderr. Exit codes: 0 ok,
1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import corpus, evaluation, search
from .classify import ClusteringKind, DistanceKind, load_model, save_model
from .corpus import load_dataset, strip_html
from .errors import DataError, UnknownLabel, UsageError
from .features import FeatureKind
from .pipeline import PipelineConfig, check_compatible, classify_batch, train_pipeline
from .signals import DEFAULT_SILENCE_THRESHOLD, PreparationKind, PreprocessKind

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message} (try --help)")


def _choices(kind):
    return [k.value for k in kind]


def _add_pipeline(p, defaults=True):
    """Pipeline flags. Without defaults, unset flags stay None (filled from a model)."""
    d = (lambda v: v) if defaults else (lambda v: None)
    g = p.add_argument_group("pipeline")
    g.add_argument("--prep", choices=_choices(PreparationKind), default=d("raw"),
                   help="preparation stage")
    g.add_argument("--preproc", choices=_choices(PreprocessKind), default=d("raw"),
                   help="preprocessing stage")
    g.add_argument("--fe", choices=_choices(FeatureKind), default=d("fft"),
                   help="feature extractor")
    g.add_argument("--cl", choices=_choices(DistanceKind), default="eucl",
                   help="distance classifier")
    g.add_argument("--cluster", choices=_choices(ClusteringKind), default=d("none"),
                   help="per-class storage: mean centroid, median centroid or all vectors")
    g.add_argument("--ngram", type=int, choices=[1, 2, 3], default=d(2))
    g.add_argument("--silence-threshold", type=float, default=d(DEFAULT_SILENCE_THRESHOLD))
    g.add_argument("--mink-p", type=float, default=3.0)
    g.add_argument("--diff-delta", type=float, default=1e-4)


def _add_common(p):
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="worker count (results do not depend on it)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-timing", action="store_true",
                   help="report classification time as 0 for byte-reproducible output")
    p.add_argument("-o", "--output", help="write results here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sigcat", description="Byte-signal document classification.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="read a manifest and list its samples")
    p.add_argument("--manifest", required=True)
    p.add_argument("--strip", action="store_true", help="strip markup from html samples")
    _add_common(p)

    p = sub.add_parser("strip-html", help="extract the text of an HTML file")
    p.add_argument("input")
    p.add_argument("output")

    p = sub.add_parser("train", help="train a model file")
    p.add_argument("--manifest", required=True)
    _add_pipeline(p)
    _add_common(p)

    for name, text in (("classify", "classify samples with a model"),
                       ("evaluate", "classify labeled samples and report metrics")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--model", required=True)
        p.add_argument("--manifest", required=True)
        _add_pipeline(p, defaults=False)
        _add_common(p)

    p = sub.add_parser("crossval", help="stratified k-fold cross-validation")
    p.add_argument("--manifest", required=True)
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--swap-with", metavar="MANIFEST",
                   help="instead of k folds, train/test on the two manifests both ways")
    _add_pipeline(p)
    _add_common(p)

    p = sub.add_parser("search", help="evaluate all 864 configurations")
    p.add_argument("--train-manifest", required=True)
    p.add_argument("--test-manifest", required=True)
    p.add_argument("--order", choices=["rank", "index"], default="rank")
    _add_pipeline(p)
    _add_common(p)

    p = sub.add_parser("case-matrix", help="best accuracy per case (description type, "
                                           "context pairing, clustering)")
    p.add_argument("--cases", required=True, help="tab-separated case-spec file")
    p.add_argument("--train-manifest", required=True)
    p.add_argument("--test-manifest", required=True)
    _add_pipeline(p)
    _add_common(p)
    return parser


def config_from_args(args, model=None) -> PipelineConfig:
    given = dict(loader=args.ngram, preparation=args.prep, preprocess=args.preproc,
                 feature=args.fe, clustering=args.cluster,
                 silence_threshold=args.silence_threshold)
    given = {k: v for k, v in given.items() if v is not None}
    extra = dict(distance=args.cl, minkowski_p=args.mink_p, diff_delta=args.diff_delta)
    if model is None:
        return PipelineConfig(**given, **extra)
    base = PipelineConfig.from_fingerprint(
        model.fingerprint, feature=model.feature_kind, clustering=model.clustering)
    fields = {name: getattr(base, name) for name in
              ("loader", "preparation", "preprocess", "feature", "clustering", "silence_threshold")}
    fields.update(given)
    config = PipelineConfig(**fields, **extra)
    check_compatible(model, config)
    return config


def _labeled(samples, what):
    missing = [s.id for s in samples if s.gold is None]
    if missing:
        raise UnknownLabel(f"{what}: {len(missing)} sample(s) have no class, "
                           f"first {missing[0]!r}")
    return samples


def _emit(args, text):
    if getattr(args, "output", None):
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _cmd_ingest(args):
    import hashlib
    samples = load_dataset(args.manifest, jobs=args.jobs)
    if args.strip:
        samples = [corpus.strip_sample(s) if s.desc_type is corpus.DescType.HTML else s
                   for s in samples]
    lines = ["\t".join(["id", "descType", "ctxVariant", "class", "bytes", "sha256"])]
    for s in samples:
        lines.append("\t".join([s.id, s.desc_type.value, s.ctx_variant.value,
                                s.gold.spelling if s.gold is not None else "-",
                                str(len(s.data)), hashlib.sha256(s.data).hexdigest()]))
    _emit(args, "\n".join(lines) + "\n")


def _cmd_strip_html(args):
    data = Path(args.input).read_bytes()
    Path(args.output).write_bytes(strip_html(data))


def _cmd_train(args):
    if not args.output:
        raise UsageError("train: -o/--output model path is required")
    config = config_from_args(args)
    samples = _labeled(load_dataset(args.manifest, jobs=args.jobs), args.manifest)
    model = train_pipeline(samples, config, jobs=args.jobs)
    save_model(model, args.output)
    print(f"trained {config.label()} on {len(samples)} samples, "
          f"{len(model.labels)} classes -> {args.output}", file=sys.stderr)


def _cmd_classify(args):
    model = load_model(args.model)
    config = config_from_args(args, model)
    samples = load_dataset(args.manifest, jobs=args.jobs)
    results, elapsed = classify_batch(samples, model, config, jobs=args.jobs)
    if args.command == "classify":
        text = "".join(f"{s.id}\t{r.label.spelling}\t{r.score!r}\n"
                       for s, r in zip(samples, results))
    else:
        _labeled(samples, args.manifest)
        report = evaluation.compute_report([s.gold for s in samples], [r.label for r in results],
                                           0.0 if args.no_timing else elapsed)
        text = evaluation.format_report(report, config.label())
    _emit(args, text)
    if not args.no_timing:
        print(f"classified {len(samples)} samples in {elapsed:.1f} ms", file=sys.stderr)


def _cmd_crossval(args):
    config = config_from_args(args)
    samples = _labeled(load_dataset(args.manifest, jobs=args.jobs), args.manifest)
    timing = not args.no_timing
    if args.swap_with:
        other = _labeled(load_dataset(args.swap_with, jobs=args.jobs), args.swap_with)
        report = evaluation.two_fold_swap(samples, other, config, timing=timing, jobs=args.jobs)
    else:
        report = evaluation.cross_validate(samples, args.k, args.seed, config,
                                           timing=timing, jobs=args.jobs)
    _emit(args, evaluation.format_report(report, config.label()))


def _cmd_search(args):
    base = config_from_args(args)
    train = _labeled(load_dataset(args.train_manifest, jobs=args.jobs), args.train_manifest)
    test = _labeled(load_dataset(args.test_manifest, jobs=args.jobs), args.test_manifest)
    configs = search.enumerate_configs(base.clustering, base)
    rows = search.run_sweep(train, test, base.clustering, args.jobs, configs,
                            timing=not args.no_timing)
    if args.order == "rank":
        rows = search.rank_rows(rows)
    failed = sum(not r.ok for r in rows)
    if failed:
        print(f"{failed} configuration(s) failed; see status column", file=sys.stderr)
    _emit(args, search.format_sweep(rows))


def _cmd_case_matrix(args):
    base = config_from_args(args)
    cases = search.parse_cases(Path(args.cases).read_text(encoding="utf-8"))
    train = search.split_by_variant(
        _labeled(load_dataset(args.train_manifest, jobs=args.jobs), args.train_manifest))
    test = search.split_by_variant(
        _labeled(load_dataset(args.test_manifest, jobs=args.jobs), args.test_manifest))
    results = search.run_case_matrix(cases, train, test, args.jobs, base,
                                     timing=not args.no_timing)
    lines = [search.format_case_matrix(results).rstrip("\n"), "",
             "\t".join(["descType", "train", "test", "clustering", "best", "accuracy"])]
    for res in results:
        c = res.case
        head = [c.desc_type.value, c.train_variant.value, c.test_variant.value, c.clustering.value]
        if res.accuracy is None:
            lines.append("\t".join(head + ["missing", res.error or "failed"]))
        else:
            lines.append("\t".join(head + [res.best.config.label(), repr(res.accuracy)]))
    _emit(args, "\n".join(lines) + "\n")


_COMMANDS = {
    "ingest": _cmd_ingest,
    "strip-html": _cmd_strip_html,
    "train": _cmd_train,
    "classify": _cmd_classify,
    "evaluate": _cmd_classify,
    "crossval": _cmd_crossval,
    "search": _cmd_search,
    "case-matrix": _cmd_case_matrix,
}


def parse_args(argv):
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        raise UsageError("--jobs must be at least 1")
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        _COMMANDS[args.command](args)
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stderr.close()
        return EXIT_OK
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - last-resort mapping
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
