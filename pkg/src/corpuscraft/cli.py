"""Command-line entry point tying every stage together.

Subcommands mirror the library modules: rule filtering, metadata
stripping, n-gram training/scoring/filtering, classifier training and
ensemble filtering, mixing plans and schedules, fertility measurement,
long-context packing, positional-encoding checks, multiple-choice
rendering, chat-mixture assembly, pipeline runs, and training-cost math.

Exit codes: 0 on success, 1 for usage or configuration problems, 2 for
malformed or inconsistent data. Logs go to stderr; results go to files
or stdout.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Any

from . import __version__
from .bpe import load_bpe, load_combined_json
from .classifier import (
    ClassifierEnsemble,
    ClassifierHyperparams,
    LabeledDocument,
    TextClassifierModel,
    ensemble_filter,
    evaluate_f1,
    train_classifier,
)
from .documents import (
    CorpusManifest,
    Document,
    WhitespaceTokenizer,
    build_manifest,
    estimate_training_flops,
    stream_documents,
    write_documents,
)
from .errors import ConfigError, CorpuscraftError, DataError, UsageError
from .fertility import compute_fertility, format_table
from .heuristics import (
    HeuristicConfig,
    apply_heuristics,
    scan_boilerplate,
    strip_metadata,
)
from .jsonio import canonical_dumps, iter_jsonl, read_json, write_json, write_jsonl
from .mcf import (
    MixturePlan,
    assemble_sft_mixture,
    plan_report,
    read_mcf_items,
    render_mcf,
    sample_format,
    shuffle_options,
)
from .mixing import (
    MixPlan,
    MixSchedule,
    build_schedule,
    resolve_targets,
    save_resolved_plan,
    schedule_stats,
)
from .ngram import CutoffPolicy, NgramModel, iter_scores, perplexity, perplexity_filter, train_ngram
from .packing import (
    PackingConfig,
    check_context_coverage,
    pack_sequences,
    read_tokenized_jsonl,
    write_packed_binary,
    write_packed_jsonl,
)
from .pipeline import PipelineRecipe, diff_reports, run_pipeline

LOGGER = logging.getLogger("corpuscraft")

CONFIG_ENV_VAR = "CORPUSCRAFT_CONFIG"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage problems via exit code 1."""

    def error(self, message: str) -> Any:  # type: ignore[override]
        raise UsageError(message)


def _sci_int(text: str) -> int:
    """Parse an integer given plainly or in scientific notation."""
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value.is_integer():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(value)


def _emit(payload: Any, output: str | None) -> None:
    text = canonical_dumps(payload)
    if output:
        write_json(output, payload)
    else:
        print(text)


def _load_tokenizer(args: argparse.Namespace) -> Any:
    if getattr(args, "tokenizer_json", None):
        return load_combined_json(args.tokenizer_json, pretokenizer=args.pretokenizer)
    if getattr(args, "vocab", None) and getattr(args, "merges", None):
        return load_bpe(args.vocab, args.merges, pretokenizer=args.pretokenizer)
    if getattr(args, "vocab", None) or getattr(args, "merges", None):
        raise UsageError("--vocab and --merges must be given together")
    return WhitespaceTokenizer()


def _labeled_documents(path: str) -> list[LabeledDocument]:
    out = []
    for lineno, record in iter_jsonl(path):
        if not isinstance(record, dict) or "label" not in record:
            raise DataError(f"{path}:{lineno}: labeled record needs a label field")
        label = record["label"]
        if not isinstance(label, int):
            raise DataError(f"{path}:{lineno}: label must be an integer")
        doc_record = {key: value for key, value in record.items() if key != "label"}
        out.append(
            LabeledDocument(
                document=Document.from_record(doc_record, where=f"{path}:{lineno}"),
                label=label,
            )
        )
    return out


def _heuristic_config(args: argparse.Namespace) -> HeuristicConfig:
    config_path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV_VAR)
    config = (
        HeuristicConfig.from_json(config_path) if config_path else HeuristicConfig()
    )
    overrides: dict[str, Any] = {}
    if getattr(args, "min_words", None) is not None:
        overrides["min_words"] = args.min_words
    if getattr(args, "max_words", None) is not None:
        overrides["max_words"] = args.max_words
    if getattr(args, "min_stopword_hits", None) is not None:
        overrides["min_stopword_hits"] = args.min_stopword_hits
    if getattr(args, "disable_rule", None):
        enabled = tuple(r for r in config.enabled_rules if r not in args.disable_rule)
        overrides["enabled_rules"] = enabled
    return config.with_overrides(**overrides) if overrides else config


# ---------------------------------------------------------------- handlers


def _cmd_flops(args: argparse.Namespace) -> int:
    flops = estimate_training_flops(args.tokens, args.params)
    print(
        canonical_dumps(
            {
                "tokens": args.tokens,
                "params": args.params,
                "flops": flops,
                "flops_sci": f"{flops:g}" if flops else "0",
            }
        )
    )
    return EXIT_OK


def _cmd_filter_heuristics(args: argparse.Namespace) -> int:
    config = _heuristic_config(args)
    audits: list[dict[str, Any]] = []
    docs_in = 0

    def kept() -> Any:
        nonlocal docs_in
        for doc in stream_documents(args.input):
            docs_in += 1
            verdict = apply_heuristics(doc, config)
            if verdict.passed:
                yield doc
            else:
                audits.append({"id": doc.id, "reasons": verdict.reasons})

    docs_out = write_documents(args.output, kept())
    if args.audit:
        write_jsonl(args.audit, audits)
    LOGGER.info("kept %d of %d documents", docs_out, docs_in)
    return EXIT_OK


def _cmd_strip_meta(args: argparse.Namespace) -> int:
    boilerplate = None
    if not args.no_boilerplate:
        boilerplate = scan_boilerplate(
            stream_documents(args.input), args.window, args.min_repeats
        )
    count = write_documents(
        args.output,
        (strip_metadata(doc, boilerplate) for doc in stream_documents(args.input)),
    )
    LOGGER.info("stripped %d documents", count)
    return EXIT_OK


def _cmd_ngram_train(args: argparse.Namespace) -> int:
    docs: list[Any] = []
    for path in args.input:
        docs.extend(stream_documents(path))
    model = train_ngram(
        docs, order=args.order, vocab_size=args.vocab_size, discount=args.discount
    )
    model.save(args.model)
    LOGGER.info("trained order-%d model over %d documents", args.order, len(docs))
    return EXIT_OK


def _cmd_ngram_score(args: argparse.Namespace) -> int:
    model = NgramModel.load(args.model)
    if args.text is not None:
        print(canonical_dumps({"perplexity": perplexity(model, args.text)}))
        return EXIT_OK
    if not args.input:
        raise UsageError("ngram score needs --input or --text")
    rows = (
        {"id": doc_id, "perplexity": score}
        for doc_id, score in iter_scores(model, stream_documents(args.input))
    )
    if args.output:
        write_jsonl(args.output, rows)
    else:
        for row in rows:
            print(canonical_dumps(row))
    return EXIT_OK


def _cmd_ngram_filter(args: argparse.Namespace) -> int:
    model = NgramModel.load(args.model)
    policy = CutoffPolicy(
        mode=args.mode, value=args.value, calibration_sample_size=args.calibration_size
    )
    result = perplexity_filter(model, stream_documents(args.input), policy)
    write_documents(args.output, result.kept)
    if args.dropped:
        write_jsonl(
            args.dropped,
            ({"id": doc_id, "perplexity": score} for doc_id, score in result.dropped),
        )
    LOGGER.info(
        "perplexity bound %.4f kept %d dropped %d",
        result.bound,
        len(result.kept),
        len(result.dropped),
    )
    return EXIT_OK


def _cmd_classifier_train(args: argparse.Namespace) -> int:
    data = _labeled_documents(args.input)
    hyper = ClassifierHyperparams(
        hash_buckets=args.buckets,
        embedding_dim=args.dim,
        epochs=args.epochs,
        learning_rate=args.lr,
        use_bigrams=not args.no_bigrams,
    )
    model = train_classifier(data, hyper, seed=args.seed)
    model.save(args.model)
    LOGGER.info("trained classifier on %d examples (seed %d)", len(data), args.seed)
    return EXIT_OK


def _cmd_classifier_score(args: argparse.Namespace) -> int:
    model = TextClassifierModel.load(args.model)
    rows = (
        {
            "id": doc.id,
            "probs": [round(float(p), 8) for p in model.score(doc)],
            "positive": round(model.positive_probability(doc), 8),
        }
        for doc in stream_documents(args.input)
    )
    if args.output:
        write_jsonl(args.output, rows)
    else:
        for row in rows:
            print(canonical_dumps(row))
    return EXIT_OK


def _cmd_classifier_filter(args: argparse.Namespace) -> int:
    if len(args.model) != 2:
        raise UsageError("classifier filter needs exactly two --model paths")
    ensemble = ClassifierEnsemble(
        [TextClassifierModel.load(path) for path in args.model],
        keep_threshold=args.threshold,
    )
    result = ensemble_filter(ensemble, stream_documents(args.input))
    write_documents(args.output, result.kept)
    if args.dropped:
        write_jsonl(
            args.dropped,
            ({"id": doc_id, "score": score} for doc_id, score in result.dropped),
        )
    LOGGER.info("kept %d dropped %d", len(result.kept), len(result.dropped))
    return EXIT_OK


def _cmd_classifier_eval(args: argparse.Namespace) -> int:
    models = [TextClassifierModel.load(path) for path in args.model]
    scorer: Any = models[0] if len(models) == 1 else ClassifierEnsemble(models)
    report = evaluate_f1(scorer, _labeled_documents(args.input))
    _emit(
        {
            "precision": report.precision,
            "recall": report.recall,
            "f1": report.f1,
            "macro_f1": report.macro_f1,
            "per_class_f1": {str(k): v for k, v in report.per_class_f1.items()},
            "support": report.support,
        },
        args.output,
    )
    return EXIT_OK


def _cmd_build_manifest(args: argparse.Namespace) -> int:
    tokenizer = _load_tokenizer(args)
    manifest = build_manifest(args.input, tokenizer)
    manifest.save(args.output)
    LOGGER.info(
        "manifest covers %d entries, %d tokens",
        len(manifest.entries),
        manifest.total_tokens(include_unknown=True),
    )
    return EXIT_OK


def _cmd_mix_plan(args: argparse.Namespace) -> int:
    plan = MixPlan.from_json(args.plan)
    manifest = CorpusManifest.load(args.manifest)
    targets = resolve_targets(plan, manifest)
    if args.output:
        save_resolved_plan(args.output, plan, targets)
    else:
        print(canonical_dumps([{k: v for k, v in t.items()} for t in targets]))
    return EXIT_OK


def _cmd_mix_emit(args: argparse.Namespace) -> int:
    plan = MixPlan.from_json(args.plan)
    manifest = CorpusManifest.load(args.manifest)
    schedule = build_schedule(plan, manifest)
    schedule.to_jsonl(args.output)
    for stage, (tokens, short) in enumerate(zip(schedule.stage_tokens, schedule.shortfalls)):
        if short:
            LOGGER.warning("stage %d fell short by %d tokens", stage, short)
        else:
            LOGGER.info("stage %d emitted %d tokens", stage, tokens)
    return EXIT_OK


def _cmd_mix_stats(args: argparse.Namespace) -> int:
    schedule = MixSchedule.from_jsonl(args.schedule)
    _emit(schedule_stats(schedule), args.output)
    return EXIT_OK


def _cmd_fertility(args: argparse.Namespace) -> int:
    treebanks: dict[str, list[str]] = {}
    for spec in args.treebank:
        lang, sep, path = spec.partition("=")
        if not sep or not lang or not path:
            raise UsageError(f"--treebank takes lang=path, got {spec!r}")
        treebanks.setdefault(lang, []).append(path)
    tokenizer = _load_tokenizer(args)
    report = compute_fertility(tokenizer, treebanks)
    if args.table:
        print(format_table([report]))
    if args.output:
        report.save(args.output)
    if not args.table and not args.output:
        print(canonical_dumps(report.to_dict()))
    return EXIT_OK


def _cmd_pack_longctx(args: argparse.Namespace) -> int:
    config = PackingConfig(
        max_length=args.max_length,
        frac_at_max=args.frac_at_max,
        min_doc_tokens=args.min_doc_tokens,
        separator_id=args.separator_id,
        seed=args.seed,
    )
    sequences = pack_sequences(read_tokenized_jsonl(args.input), config)
    if args.binary:
        write_packed_binary(args.binary, sequences)
    if args.output:
        write_packed_jsonl(args.output, sequences)
    if not args.binary and not args.output:
        raise UsageError("pack-longctx needs --output and/or --binary")
    at_max = sum(1 for sequence in sequences if sequence.at_max)
    LOGGER.info(
        "packed %d sequences, %d at max length (%.1f%%)",
        len(sequences),
        at_max,
        100.0 * at_max / len(sequences) if sequences else 0.0,
    )
    return EXIT_OK


def _cmd_rope_check(args: argparse.Namespace) -> int:
    report = check_context_coverage(args.base, args.head_dim, args.target_context)
    _emit(report.to_dict(), args.output)
    return EXIT_OK


def _cmd_mcf_render(args: argparse.Namespace) -> int:
    items = read_mcf_items(args.input)
    rows = []
    for index, item in enumerate(items):
        if not args.no_shuffle:
            item = shuffle_options(item, args.seed, index)
        spec = sample_format(args.seed, index)
        prompt, answer = render_mcf(item, spec)
        rows.append(
            {
                "id": item.source_id,
                "prompt": prompt,
                "answer": answer,
                "gold_index": item.gold_index,
                "format": {
                    "index_style": spec.index_style,
                    "separator": spec.separator,
                    "answer_style": spec.answer_style,
                },
            }
        )
    write_jsonl(args.output, rows)
    LOGGER.info("rendered %d items", len(rows))
    return EXIT_OK


def _cmd_mcf_mix_sft(args: argparse.Namespace) -> int:
    plan = MixturePlan.from_json(args.plan)
    if args.dry_run:
        report = plan_report(plan)
    else:
        report = assemble_sft_mixture(plan, args.output)
    if args.report:
        report.save(args.report)
    else:
        print(canonical_dumps(report.to_dict()))
    return EXIT_OK


def _cmd_pipeline_run(args: argparse.Namespace) -> int:
    recipe = PipelineRecipe.from_json(args.recipe)
    report = run_pipeline(recipe, report_path=args.report)
    for step in report["steps"]:
        LOGGER.info(
            "step %s: %d -> %d", step["name"], step.get("docs_in", 0), step.get("docs_out", 0)
        )
    if not args.report and not recipe.report_path:
        print(canonical_dumps(report))
    return EXIT_OK


def _cmd_pipeline_diff(args: argparse.Namespace) -> int:
    tolerances: dict[str, float] = {}
    for spec in args.tolerance or []:
        field, sep, value = spec.partition("=")
        if not sep:
            raise UsageError(f"--tolerance takes field=value, got {spec!r}")
        try:
            tolerances[field] = float(value)
        except ValueError:
            raise UsageError(f"--tolerance value must be numeric: {spec!r}") from None
    left = read_json(args.left)
    right = read_json(args.right)
    differences = diff_reports(left, right, tolerances)
    print(canonical_dumps({"differences": differences, "identical": not differences}))
    return EXIT_OK


# ------------------------------------------------------------ parser setup


def _add_tokenizer_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--vocab", help="vocab JSON (token -> id)")
    parser.add_argument("--merges", help="merge list, one pair per line")
    parser.add_argument(
        "--tokenizer-json", help="combined tokenizer JSON with model.vocab and model.merges"
    )
    parser.add_argument(
        "--pretokenizer",
        choices=("split_pattern", "whitespace"),
        default="split_pattern",
        help="how text splits into pieces before byte-pair merging",
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="corpuscraft", description=__doc__)
    parser.add_argument("--version", action="version", version=f"corpuscraft {__version__}")
    parser.add_argument(
        "--log-level",
        default="info",
        choices=("debug", "info", "warning", "error"),
        help="stderr logging verbosity",
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=1,
        help="worker processes; execution is serial in this version",
    )
    parser.add_argument(
        "--deterministic",
        action="store_true",
        help="force byte-reproducible output (serial execution)",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("flops", help="exact training-cost estimate 6 * tokens * params")
    p.add_argument("--tokens", type=_sci_int, required=True)
    p.add_argument("--params", type=_sci_int, required=True)
    p.set_defaults(func=_cmd_flops)

    p = sub.add_parser("filter-heuristics", help="rule-based quality filtering")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--audit", help="write failed ids and reasons here")
    p.add_argument("--config", help=f"heuristic config JSON (default ${CONFIG_ENV_VAR})")
    p.add_argument("--min-words", type=int)
    p.add_argument("--max-words", type=int)
    p.add_argument("--min-stopword-hits", type=int)
    p.add_argument("--disable-rule", action="append", metavar="RULE")
    p.set_defaults(func=_cmd_filter_heuristics)

    p = sub.add_parser("strip-meta", help="remove URLs, emails, hashtags, timestamps, boilerplate")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--no-boilerplate", action="store_true", help="skip the boilerplate scan")
    p.add_argument("--window", type=int, default=1000, help="docs scanned per source")
    p.add_argument("--min-repeats", type=int, default=3, help="repeats before a line is boilerplate")
    p.set_defaults(func=_cmd_strip_meta)

    ngram = sub.add_parser("ngram", help="perplexity model commands").add_subparsers(
        dest="subcommand", metavar="subcommand"
    )
    p = ngram.add_parser("train", help="train a smoothed n-gram model")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--order", type=int, default=5)
    p.add_argument("--vocab-size", type=_sci_int, default=500_000)
    p.add_argument("--discount", type=float, default=0.75)
    p.set_defaults(func=_cmd_ngram_train)
    p = ngram.add_parser("score", help="perplexity per document or for one text")
    p.add_argument("--model", required=True)
    p.add_argument("--input")
    p.add_argument("--text")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_ngram_score)
    p = ngram.add_parser("filter", help="drop documents above a perplexity bound")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--mode", choices=("absolute", "percentile"), default="percentile")
    p.add_argument("--value", type=float, default=95.0)
    p.add_argument("--calibration-size", type=_sci_int, default=100_000)
    p.add_argument("--dropped", help="write dropped ids and scores here")
    p.set_defaults(func=_cmd_ngram_filter)

    clf = sub.add_parser("classifier", help="quality classifier commands").add_subparsers(
        dest="subcommand", metavar="subcommand"
    )
    p = clf.add_parser("train", help="train one ensemble member")
    p.add_argument("--input", required=True, help="JSONL documents with a label field")
    p.add_argument("--model", required=True)
    p.add_argument("--buckets", type=_sci_int, default=1 << 21)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-bigrams", action="store_true")
    p.set_defaults(func=_cmd_classifier_train)
    p = clf.add_parser("score", help="class probabilities per document")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_classifier_score)
    p = clf.add_parser("filter", help="keep documents the two-model ensemble accepts")
    p.add_argument("--model", action="append", required=True, help="give twice, one per member")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--dropped")
    p.set_defaults(func=_cmd_classifier_filter)
    p = clf.add_parser("eval", help="F1 against a labeled holdout")
    p.add_argument("--model", action="append", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_classifier_eval)

    p = sub.add_parser("build-manifest", help="tokenize a corpus and summarize per lang/source")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--output", required=True)
    _add_tokenizer_flags(p)
    p.set_defaults(func=_cmd_build_manifest)

    mix = sub.add_parser("mix", help="language-mixing commands").add_subparsers(
        dest="subcommand", metavar="subcommand"
    )
    p = mix.add_parser("plan", help="resolve stage targets against a manifest")
    p.add_argument("--plan", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_mix_plan)
    p = mix.add_parser("emit", help="build the deterministic emission schedule")
    p.add_argument("--plan", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_mix_emit)
    p = mix.add_parser("stats", help="realized shares of a schedule")
    p.add_argument("--schedule", required=True)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_mix_stats)

    p = sub.add_parser("fertility", help="tokens per word over treebanks")
    p.add_argument(
        "--treebank",
        action="append",
        required=True,
        metavar="LANG=PATH",
        help="repeatable; CoNLL-U file per language",
    )
    _add_tokenizer_flags(p)
    p.add_argument("--output", help="write the JSON report here")
    p.add_argument("--table", action="store_true", help="print an aligned table")
    p.set_defaults(func=_cmd_fertility)

    p = sub.add_parser("pack-longctx", help="pack tokenized documents into training sequences")
    p.add_argument("--input", required=True, help="JSONL with id and tokens per line")
    p.add_argument("--output", help="packed JSONL path")
    p.add_argument("--binary", help="binary output prefix (.bin + .idx.json)")
    p.add_argument("--max-length", type=_sci_int, default=16_384)
    p.add_argument("--frac-at-max", type=float, default=0.30)
    p.add_argument("--min-doc-tokens", type=_sci_int, default=0)
    p.add_argument("--separator-id", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_pack_longctx)

    p = sub.add_parser("rope-check", help="does the rotary base cover a context length")
    p.add_argument("--base", type=float, required=True)
    p.add_argument("--head-dim", type=int, required=True)
    p.add_argument("--target-context", type=_sci_int, required=True)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_rope_check)

    mcf = sub.add_parser("mcf", help="multiple-choice formatting commands").add_subparsers(
        dest="subcommand", metavar="subcommand"
    )
    p = mcf.add_parser("render", help="render items under seeded random formats")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-shuffle", action="store_true", help="keep the given option order")
    p.set_defaults(func=_cmd_mcf_render)
    p = mcf.add_parser("mix-sft", help="merge chat datasets per a mixture plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--output")
    p.add_argument("--report")
    p.add_argument("--dry-run", action="store_true", help="report requested fractions only")
    p.set_defaults(func=_cmd_mcf_mix_sft)

    pipe = sub.add_parser("pipeline", help="composed filtering runs").add_subparsers(
        dest="subcommand", metavar="subcommand"
    )
    p = pipe.add_parser("run", help="execute a recipe")
    p.add_argument("--recipe", required=True)
    p.add_argument("--report", help="overrides the recipe's report path")
    p.set_defaults(func=_cmd_pipeline_run)
    p = pipe.add_parser("diff", help="compare two run reports")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--tolerance", action="append", metavar="FIELD=ABS")
    p.set_defaults(func=_cmd_pipeline_diff)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(
            stream=sys.stderr,
            level=getattr(logging, args.log_level.upper()),
            format="%(levelname)s %(name)s: %(message)s",
        )
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        if args.workers > 1:
            LOGGER.debug("workers > 1 requested; this version executes serially")
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CorpuscraftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
