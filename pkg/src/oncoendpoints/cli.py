"""Command-line entry point.

Subcommands cover the whole pipeline: filter, tag, resolve, split, score,
agree, synth, export-grid, serve. Exit status: 0 success, 1 validation
error, 2 I/O error. All randomness flows from an explicit --seed flag, so
repeated runs produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataset, metrics, patterns, resolve, tagging
from .schema import SchemaError


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are validation errors (exit 1)
        self.print_usage(sys.stderr)
        raise CliError(message)


class CliError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oncoendpoints", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("filter", help="keep sentences matching the query library")
    p.add_argument("--input", required=True)
    p.add_argument("--format", default="plain_sentences", choices=["plain_sentences", "abstract_records"])
    p.add_argument("--queries", default=None, help="query directory (default: bundled library)")
    p.add_argument("--ensembles", default=None, help="comma-separated ensemble names (default: all)")
    p.add_argument("--output", required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("tag", help="produce entity spans per sentence")
    p.add_argument("--backend", default="rule", choices=["rule", "import"])
    p.add_argument("--input", required=True)
    p.add_argument("--format", default="plain_sentences", choices=["plain_sentences", "abstract_records"])
    p.add_argument("--predictions", help="prediction file (backend=import)")
    p.add_argument("--queries", default=None)
    p.add_argument("--output", required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("resolve", help="turn spans into structured observations")
    p.add_argument("--input", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--diagnostics", help="optional diagnostics JSONL")

    p = sub.add_parser("split", help="dataset splits")
    p.add_argument("--input", required=True)
    p.add_argument("--kfold", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-pmids", help="file with one pmid per line")
    p.add_argument("--output-dir", help="fold output directory (kfold)")
    p.add_argument("--output-train")
    p.add_argument("--output-test")

    p = sub.add_parser("score", help="exact-match span scoring")
    p.add_argument("--input", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--output", help="report CSV")

    p = sub.add_parser("agree", help="inter-annotator agreement")
    p.add_argument("--input", required=True)
    p.add_argument("--a", dest="source_a", required=True)
    p.add_argument("--b", dest="source_b", required=True)
    p.add_argument("--output", help="disagreement worklist JSONL")

    p = sub.add_parser("synth", help="generate a synthetic corpus with gold spans")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output-corpus", required=True)
    p.add_argument("--output-gold", required=True)

    p = sub.add_parser("export-grid", help="write the fine-tune hyperparameter grid")
    p.add_argument("--output", required=True)
    p.add_argument("--model", default="bert-base-cased")
    p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("serve", help="run the review HTTP service")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotations", nargs="+", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--state-dir", default=None)
    p.add_argument("--base-source", default=None)

    return parser


# ---------------------------------------------------------------------------
# Command implementations


def _load_corpus(path, format="plain_sentences") -> dataset.Corpus:
    return dataset.ingest(path, format)


def _load_annotations(path, corpus: dataset.Corpus, source: str, strict_sentences=False):
    annotations, summary = tagging.load_prediction_file(path, corpus.sentence_map(), source=source)
    if strict_sentences:
        unknown = [i for i in summary.issues if i.kind == "UnknownSentence"]
        if unknown:
            raise metrics.CorpusMismatch(
                f"{source} file references sentences outside the corpus "
                f"({len(unknown)} records, e.g. {unknown[0].sentence_id!r})"
            )
    for issue in summary.issues:
        print(f"warning: {issue.kind}: {issue.detail}", file=sys.stderr)
    return annotations


def _select_ensembles(library, ensemble_names) -> list[patterns.QueryEnsemble]:
    if ensemble_names:
        names = [n.strip() for n in ensemble_names.split(",") if n.strip()]
        missing = [n for n in names if n not in library]
        if missing:
            raise CliError(f"unknown ensembles: {', '.join(missing)}")
        return [library[n] for n in names]
    # negative_samples selects confusion sentences for training corpora; it
    # is not an endpoint filter, so it only runs when asked for by name.
    return [e for name, e in library.items() if name != "negative_samples"]


def _ensembles(args) -> list[patterns.QueryEnsemble]:
    library = patterns.load_query_library(args.queries)
    return _select_ensembles(library, getattr(args, "ensembles", None))


def _chunks(items, size):
    for i in range(0, len(items), size):
        yield items[i : i + size]


def cmd_filter(args) -> int:
    corpus = _load_corpus(args.input, args.format)
    sentences = corpus.sentences()
    ensembles = _ensembles(args)
    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        kept = []
        with ProcessPoolExecutor(
            max_workers=args.jobs, initializer=_init_filter_worker, initargs=(args.queries, args.ensembles)
        ) as pool:
            for chunk in pool.map(_filter_chunk, _chunks(sentences, 2000)):
                kept.extend(chunk)
    else:
        kept = list(patterns.filter_corpus(ensembles, sentences))
    dataset.write_corpus(kept, args.output)
    print(f"kept {len(kept)} of {len(sentences)} sentences")
    return 0


_WORKER_ENSEMBLES = None


def _init_filter_worker(queries_dir, ensemble_names):
    global _WORKER_ENSEMBLES
    library = patterns.load_query_library(queries_dir)
    _WORKER_ENSEMBLES = _select_ensembles(library, ensemble_names)


def _filter_chunk(sentences):
    return list(patterns.filter_corpus(_WORKER_ENSEMBLES, sentences))


_WORKER_TAGGER = None


def _init_tag_worker(queries_dir):
    global _WORKER_TAGGER
    library = patterns.load_query_library(queries_dir)
    _WORKER_TAGGER = tagging.RuleTagger(library)


def _tag_chunk(sentences):
    return [(s.sentence_id, _WORKER_TAGGER.tag(s)) for s in sentences]


def cmd_tag(args) -> int:
    corpus = _load_corpus(args.input, args.format)
    if args.backend == "rule":
        sentences = corpus.sentences()
        annotations = tagging.AnnotationSet(source="rule")
        if args.jobs > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(
                max_workers=args.jobs, initializer=_init_tag_worker, initargs=(args.queries,)
            ) as pool:
                for chunk in pool.map(_tag_chunk, _chunks(sentences, 1000)):
                    for sid, spans in chunk:
                        annotations.add(sid, spans)
        else:
            library = patterns.load_query_library(args.queries)
            annotations = tagging.RuleTagger(library).tag_corpus(sentences)
    else:
        if not args.predictions:
            raise CliError("--predictions is required with --backend import")
        annotations = _load_annotations(args.predictions, corpus, source="import")
    tagging.dump_annotations(annotations, args.output)
    print(f"tagged {len(annotations.entries)} sentences, {annotations.total_spans()} spans")
    return 0


def cmd_resolve(args) -> int:
    corpus = _load_corpus(args.input)
    annotations = _load_annotations(args.annotations, corpus, source="annotations")
    observations, diagnostics = resolve.resolve_corpus(corpus.sentences(), annotations)
    resolve.write_observations(observations, args.output)
    if args.diagnostics:
        with open(args.diagnostics, "w", encoding="utf-8") as fh:
            for diag in diagnostics:
                fh.write(
                    json.dumps(
                        {
                            "sentence_id": diag.sentence_id,
                            "issues": [
                                {
                                    "kind": issue.kind,
                                    "detail": issue.detail,
                                    "spans": [[s.start, s.end, s.label.value] for s in issue.spans],
                                }
                                for issue in diag.issues
                            ],
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
    print(f"resolved {len(observations)} observations ({len(diagnostics)} sentences with diagnostics)")
    return 0


def cmd_split(args) -> int:
    corpus = _load_corpus(args.input)
    sentences = corpus.sentences()
    if args.kfold:
        if not args.output_dir:
            raise CliError("--output-dir is required with --kfold")
        folds = dataset.kfold(sentences, args.kfold, args.seed)
        outdir = Path(args.output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        for i, fold in enumerate(folds):
            dataset.write_corpus(fold, outdir / f"fold_{i}.jsonl")
        print("fold sizes: " + "/".join(str(len(f)) for f in folds))
        return 0
    if args.test_pmids:
        if not (args.output_train and args.output_test):
            raise CliError("--output-train and --output-test are required with --test-pmids")
        with open(args.test_pmids, encoding="utf-8") as fh:
            pmids = {line.strip() for line in fh if line.strip()}
        train, test = dataset.split_pmid_disjoint(sentences, pmids)
        dataset.write_corpus(train, args.output_train)
        dataset.write_corpus(test, args.output_test)
        print(f"train {len(train)} sentences, test {len(test)} sentences")
        return 0
    raise CliError("split needs either --kfold or --test-pmids")


def cmd_score(args) -> int:
    corpus = _load_corpus(args.input)
    gold = _load_annotations(args.gold, corpus, source="gold", strict_sentences=True)
    pred = _load_annotations(args.pred, corpus, source="pred", strict_sentences=True)
    report = metrics.score(gold, pred, corpus.sentence_map())
    p, r, f = report.overall()
    if args.output:
        metrics.write_report(report, args.output)
    print(f"overall precision={100 * p:.1f} recall={100 * r:.1f} f1={100 * f:.1f}")
    return 0


def cmd_agree(args) -> int:
    corpus = _load_corpus(args.input)
    a = _load_annotations(args.source_a, corpus, source="a")
    b = _load_annotations(args.source_b, corpus, source="b")
    report = metrics.agreement(a, b, corpus.sentence_map())
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            for diff in report.disagreeing_sentences:
                fh.write(
                    json.dumps(
                        {
                            "sentence_id": diff.sentence_id,
                            "only_a": [[s.start, s.end, s.label.value] for s in diff.only_a],
                            "only_b": [[s.start, s.end, s.label.value] for s in diff.only_b],
                            "conflicts": [
                                {
                                    "offsets": [x.start, x.end],
                                    "a": x.label.value,
                                    "b": y.label.value,
                                }
                                for x, y in diff.conflicts
                            ],
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
    print(
        f"token agreement {100 * report.token_agreement:.2f}% "
        f"({report.disagreeing_tokens} of {report.total_tokens} tokens differ, "
        f"{len(report.disagreeing_sentences)} sentences)"
    )
    return 0


def cmd_synth(args) -> int:
    corpus, gold = dataset.generate_synthetic(args.n, args.seed)
    dataset.write_corpus(corpus.sentences(), args.output_corpus)
    tagging.dump_annotations(gold, args.output_gold)
    print(f"wrote {len(corpus)} sentences, {gold.total_spans()} gold spans")
    return 0


def cmd_export_grid(args) -> int:
    configs = dataset.finetune_grid(model_name=args.model, seed=args.seed)
    dataset.export_finetune_grid(configs, args.output)
    print(f"wrote {len(configs)} configurations")
    return 0


def cmd_serve(args) -> int:
    import os

    import uvicorn

    from .service import ReviewState, ReviewStore, create_app

    corpus = _load_corpus(args.corpus)
    sources = {}
    for path in args.annotations:
        name = Path(path).stem
        sources[name] = _load_annotations(path, corpus, source=name)
    base = args.base_source or Path(args.annotations[0]).stem
    state = ReviewState(corpus, sources, base_source=base)
    state_dir = args.state_dir or os.environ.get("ONCOENDPOINTS_STATE_DIR")
    store = ReviewStore(state, state_dir=state_dir)
    app = create_app({Path(args.corpus).stem: store})
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


_COMMANDS = {
    "filter": cmd_filter,
    "tag": cmd_tag,
    "resolve": cmd_resolve,
    "split": cmd_split,
    "score": cmd_score,
    "agree": cmd_agree,
    "synth": cmd_synth,
    "export-grid": cmd_export_grid,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SchemaError, dataset.ParseError, dataset.InvalidK, dataset.EmptyAxis,
            metrics.CorpusMismatch, metrics.EmptyReport, patterns.PatternSyntaxError,
            tagging.MisalignedSpan, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
