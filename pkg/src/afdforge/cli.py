"""Command-line entry point: one subcommand per pipeline stage plus ``pipeline``.

Exit status is 0 on success, 1 for usage and configuration errors and 2 for
data errors. Every run writes a JSON manifest next to its main output.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

from . import __version__
from .authorship import RawPost, extract_posts
from .blockfilter import TermList, drop_anonymous, filter_blocks
from .classifiers import ranked_term_weights, save_model
from .config import ConfigError, OPTIONS, derive_seed, load_config
from .corpus import (
    LabeledPost,
    balance_sample,
    delta_distribution,
    label_posts,
    merge_all,
    read_corpus,
    read_jsonl,
    write_histogram_csv,
    write_jsonl,
)
from .evaluate import (
    SweepTable,
    corpus_stats,
    cross_validate,
    length_csv,
    make_classifier,
    metrics_header,
    metrics_row,
    prepare_documents,
    timeframe_sweep,
)
from .ingest import BlockLogStats, PageHistory, open_maybe_compressed, parse_block_log, stream_afd_pages, write_block_tsv
from .textclean import CleanPost, CleanStats, clean_post, load_patterns
from .timeutil import parse_duration

logger = logging.getLogger("afdforge")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _open_out(path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="\n")


def _write_text(path, text: str) -> None:
    with _open_out(path) as fh:
        fh.write(text)


class Manifest:
    """Inputs, outputs, seeds and resolved configuration of one run."""

    def __init__(self, command: str, argv: Sequence[str], config: dict):
        self.data: dict[str, Any] = {
            "tool": "afdforge",
            "version": __version__,
            "command": command,
            "argv": list(argv),
            "config": {k: config[k] for k in OPTIONS},
            "seeds": {},
            "inputs": {},
            "outputs": {},
            "stats": {},
            "stages": [],
            "status": "running",
        }

    def input(self, name: str, path) -> None:
        self.data["inputs"][name] = {"path": str(path), "sha256": _sha256(path)}

    def output(self, name: str, path) -> None:
        p = Path(path)
        if p.is_dir():
            files = {f.name: _sha256(f) for f in sorted(p.iterdir()) if f.is_file()}
            self.data["outputs"][name] = {"path": str(p), "files": files}
        else:
            self.data["outputs"][name] = {"path": str(p), "sha256": _sha256(p)}

    def write(self, path) -> None:
        _write_text(path, json.dumps(self.data, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


# --- stages ------------------------------------------------------------------
# Each stage reads its inputs from files and writes its outputs to files, so
# running the subcommands one after another equals running ``pipeline``.


def stage_extract_afd(cfg, dump, out, man: Manifest) -> None:
    man.input("dump", dump)
    n = 0
    with open_maybe_compressed(dump) as fh, _open_out(out) as sink:
        for page in stream_afd_pages(fh, cfg["prefix"]):
            sink.write(json.dumps(page.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
            n += 1
    man.data["stats"]["afd_pages"] = n
    man.output("pages", out)


def stage_extract_blocks(cfg, log, out, man: Manifest) -> None:
    man.input("block_log", log)
    stats = BlockLogStats()
    with open_maybe_compressed(log) as fh:
        events = parse_block_log(fh, stats)
    with _open_out(out) as sink:
        write_block_tsv(events, sink)
    man.data["stats"]["block_log"] = vars(stats)
    man.output("blocks", out)


def stage_attribute(cfg, pages, out, man: Manifest) -> None:
    man.input("pages", pages)
    n = 0
    with open(pages, encoding="utf-8") as src, _open_out(out) as sink:
        for line in src:
            if not line.strip():
                continue
            for post in extract_posts(PageHistory.from_dict(json.loads(line))):
                sink.write(json.dumps(post.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
                n += 1
    man.data["stats"]["raw_posts"] = n
    man.output("raw_posts", out)


def stage_clean(cfg, posts, out, man: Manifest) -> None:
    man.input("raw_posts", posts)
    tpl = load_patterns(cfg["template_patterns"]) if cfg["template_patterns"] else None
    sig = load_patterns(cfg["signature_patterns"]) if cfg["signature_patterns"] else None
    stats = CleanStats()
    n = empty = 0
    with open(posts, encoding="utf-8") as src, _open_out(out) as sink:
        for line in src:
            if not line.strip():
                continue
            post = clean_post(RawPost.from_dict(json.loads(line)), tpl, sig, stats)
            if not post.tokens:
                empty += 1
                continue
            sink.write(json.dumps(post.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
            n += 1
    man.data["stats"]["clean"] = {"posts": n, "empty_dropped": empty, "unbalanced_templates": stats.unbalanced_templates}
    man.output("clean_posts", out)


def _read_blocks(path):
    with open(path, "rb") as fh:
        return parse_block_log(fh)


def stage_filter_blocks(cfg, blocks, out, man: Manifest) -> None:
    man.input("blocks", blocks)
    events = _read_blocks(blocks)
    registered = drop_anonymous(events)
    terms = TermList.load(cfg["block_terms"]) if cfg["block_terms"] else None
    kept = filter_blocks(registered, cfg["block_filter"], terms)
    with _open_out(out) as sink:
        write_block_tsv(kept, sink)
    man.data["stats"]["blocks"] = {"input": len(events), "registered": len(registered), "kept": len(kept)}
    man.output("filtered_blocks", out)


def _read_clean(path) -> list[CleanPost]:
    with open(path, encoding="utf-8") as fh:
        return [CleanPost.from_dict(json.loads(line)) for line in fh if line.strip()]


def stage_label(cfg, posts, blocks, out, man: Manifest) -> None:
    man.input("clean_posts", posts)
    man.input("filtered_blocks", blocks)
    labeled = label_posts(_read_clean(posts), _read_blocks(blocks), parse_duration(cfg["timeframe"]))
    with _open_out(out) as sink:
        write_jsonl(labeled, sink)
    man.data["stats"]["labeled"] = {"posts": len(labeled), "disruptive": sum(p.label for p in labeled)}
    man.output("labeled", out)


def stage_window(cfg, posts, out, man: Manifest) -> None:
    man.input("labeled", posts)
    with open(posts, encoding="utf-8") as fh:
        labeled = read_jsonl(fh, LabeledPost)
    merged = merge_all(labeled, parse_duration(cfg["window"]))
    with _open_out(out) as sink:
        write_jsonl(merged, sink)
    man.data["stats"]["merged"] = {"posts": len(merged), "disruptive": sum(p.label for p in merged)}
    man.output("merged", out)


def _read_any(path):
    with open(path, encoding="utf-8") as fh:
        return read_corpus(fh)


def stage_sample(cfg, posts, out, man: Manifest) -> None:
    man.input("corpus", posts)
    seed = derive_seed(cfg["seed"], "sample")
    man.data["seeds"]["sample"] = seed
    sample = balance_sample(_read_any(posts), cfg["balance"], seed)
    with _open_out(out) as sink:
        write_jsonl(sample, sink)
    man.data["stats"]["sample"] = {"posts": len(sample)}
    man.output("sample", out)


def _params(cfg, classifier: str) -> dict:
    if classifier == "nb":
        return {"delta": cfg["delta"]}
    if classifier == "svm":
        return {"C": cfg["C"]}
    if classifier == "lm":
        return {"order": cfg["order"], "skips": cfg["skips"]}
    raise ValueError(f"unknown classifier {classifier!r}")


def _evaluate_rows(cfg, corpus, classifiers, man: Manifest, predictions_dir=None) -> str:
    seed = derive_seed(cfg["seed"], "evaluate")
    man.data["seeds"]["evaluate"] = seed
    docs = [p.tokens for p in corpus]
    labels = [p.label for p in corpus]
    lines = [metrics_header()]
    meta = {}
    for name in classifiers:
        rep = cross_validate(
            docs, labels, name, cfg["folds"], cfg["sampling"], seed, cfg["features"], _params(cfg, name), cfg["timeframe"]
        )
        lines.append(metrics_row(name, rep.summary()))
        meta[name] = rep.metadata()
        if predictions_dir is not None:
            _write_text(Path(predictions_dir) / f"predictions_{name}.csv", rep.predictions_csv())
            _write_text(Path(predictions_dir) / f"folds_{name}.tsv", rep.folds_tsv())
    man.data["stats"]["evaluation"] = meta
    return "\n".join(lines) + "\n"


def stage_evaluate(cfg, corpus_path, classifiers, out, man: Manifest, predictions_dir=None) -> None:
    man.input("corpus", corpus_path)
    _write_text(out, _evaluate_rows(cfg, _read_any(corpus_path), classifiers, man, predictions_dir))
    man.output("report", out)


def stage_train(cfg, corpus_path, classifier, model_dir, man: Manifest) -> None:
    man.input("corpus", corpus_path)
    corpus = _read_any(corpus_path)
    docs = prepare_documents([p.tokens for p in corpus], classifier, cfg["features"])
    model = make_classifier(classifier, **_params(cfg, classifier))
    model.fit(docs, [p.label for p in corpus])
    save_model(model, model_dir, {"features": cfg["features"]})
    if classifier in ("nb", "svm"):
        ranked = ranked_term_weights(model)
        k = cfg["top_terms"]
        lines = ["class\trank\tterm\tweight"]
        lines += [f"disruptive\t{i + 1}\t{t}\t{float(w)!r}" for i, (t, w) in enumerate(ranked[:k])]
        lines += [f"constructive\t{i + 1}\t{t}\t{float(w)!r}" for i, (t, w) in enumerate(reversed(ranked[-k:] if k else []))]
        _write_text(Path(model_dir) / "top_terms.tsv", "\n".join(lines) + "\n")
    man.output("model", model_dir)


def stage_sweep(cfg, labeled_path, out, man: Manifest) -> SweepTable:
    man.input("labeled", labeled_path)
    with open(labeled_path, encoding="utf-8") as fh:
        posts = read_jsonl(fh, LabeledPost)
    seed = derive_seed(cfg["seed"], "sweep")
    man.data["seeds"]["sweep"] = seed
    table = timeframe_sweep(
        posts,
        [parse_duration(t) for t in cfg["timeframes"]],
        cfg["classifiers"],
        cfg["folds"],
        cfg["sampling"],
        seed,
        cfg["features"],
        {name: _params(cfg, name) for name in cfg["classifiers"]},
    )
    _write_text(out, table.to_tsv())
    _write_text(str(out) + ".detail.tsv", table.to_tsv(detail=True))
    man.data["stats"]["sweep"] = {r.timeframe.total_seconds(): r.note for r in table.rows if r.note}
    man.output("sweep", out)
    return table


def stage_stats(cfg, corpus_path, out, man: Manifest, lengths_out=None, posts_path=None, blocks_path=None, deltas_out=None):
    man.input("corpus", corpus_path)
    corpus = _read_any(corpus_path)
    _write_text(out, corpus_stats(corpus).to_tsv())
    man.output("stats", out)
    if lengths_out:
        _write_text(lengths_out, length_csv(corpus))
        man.output("lengths", lengths_out)
    if deltas_out:
        if not blocks_path:
            raise ValueError("a delta histogram needs --blocks")
        source = posts_path or corpus_path
        posts = _read_clean(source) if posts_path else corpus
        man.input("blocks", blocks_path)
        rows = delta_distribution(
            posts, _read_blocks(blocks_path), parse_duration(cfg["horizon"]), parse_duration(cfg["bucket"])
        )
        with _open_out(deltas_out) as sink:
            write_histogram_csv(rows, sink)
        man.output("deltas", deltas_out)


# --- argument parsing --------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file, or a run manifest")
    p.add_argument("--seed", type=int, default=None, help="top-level random seed")
    p.add_argument("--manifest", help="manifest path (default: next to the main output)")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--features", choices=("full-text", "function-words"))
    p.add_argument("--delta", type=float, help="NB smoothing (1 = Laplace)")
    p.add_argument("--C", dest="C", type=float, help="SVM regularization")
    p.add_argument("--order", type=int, help="LM order")
    p.add_argument("--skips", choices=("true", "false"), help="LM skip patterns")


def _add_cv_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--folds", type=int)
    p.add_argument("--sampling", choices=("stratified", "linear_per_class", "linear_global"))
    p.add_argument("--timeframe", help="recorded in the report metadata")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="afdforge", description="Build and evaluate an annotated AfD discussion corpus.")
    parser.add_argument("--version", action="version", version=f"afdforge {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("extract-afd", help="stream AfD page histories out of a dump")
    p.add_argument("--dump")
    p.add_argument("--prefix")
    p.add_argument("--out", required=True)

    p = sub.add_parser("extract-blocks", help="parse a block log into TSV")
    p.add_argument("--log", dest="block_log")
    p.add_argument("--out", required=True)

    p = sub.add_parser("attribute", help="attribute tokens and extract raw posts")
    p.add_argument("--pages", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("clean", help="strip markup, templates and signatures")
    p.add_argument("--posts", required=True)
    p.add_argument("--template-patterns", dest="template_patterns")
    p.add_argument("--signature-patterns", dest="signature_patterns")
    p.add_argument("--out", required=True)

    p = sub.add_parser("filter-blocks", help="drop anonymous and non-communication blocks")
    p.add_argument("--blocks", required=True)
    p.add_argument("--mode", dest="block_filter", choices=("blacklist", "whitelist"))
    p.add_argument("--terms", dest="block_terms")
    p.add_argument("--out", required=True)

    p = sub.add_parser("label", help="label posts by the timeframe rule")
    p.add_argument("--posts", required=True)
    p.add_argument("--blocks", required=True)
    p.add_argument("--timeframe")
    p.add_argument("--out", required=True)

    p = sub.add_parser("window", help="merge each author's posts with the sliding window")
    p.add_argument("--posts", required=True)
    p.add_argument("--window")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sample", help="balance the classes")
    p.add_argument("--posts", required=True)
    p.add_argument("--strategy", dest="balance", choices=("random", "chronological"))
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train one classifier and save it")
    p.add_argument("--corpus", required=True)
    p.add_argument("--classifier", choices=("nb", "lm", "svm"), required=True)
    _add_model_flags(p)
    p.add_argument("--top-terms", dest="top_terms", type=int)
    p.add_argument("--model-dir", required=True)

    p = sub.add_parser("evaluate", help="cross-validate one classifier")
    p.add_argument("--corpus", required=True)
    p.add_argument("--classifier", choices=("nb", "lm", "svm"), required=True)
    _add_model_flags(p)
    _add_cv_flags(p)
    p.add_argument("--predictions-dir", help="also write per-fold confusions and scored predictions")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="evaluate all classifiers over several timeframes")
    p.add_argument("--posts", required=True, help="labeled posts (all of them, before sampling)")
    p.add_argument("--timeframes", help="comma-separated durations, e.g. 13h,1d,1.5d")
    p.add_argument("--classifiers", help="comma-separated subset of nb,lm,svm")
    _add_model_flags(p)
    p.add_argument("--folds", type=int)
    p.add_argument("--sampling", choices=("stratified", "linear_per_class", "linear_global"))
    p.add_argument("--out", required=True)

    p = sub.add_parser("stats", help="post-length and probe-term statistics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lengths-out")
    p.add_argument("--posts", help="clean posts for the delta histogram (default: the corpus)")
    p.add_argument("--blocks", help="filtered blocks for the delta histogram")
    p.add_argument("--deltas-out")
    p.add_argument("--horizon")
    p.add_argument("--bucket")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="cross-validate several classifiers into one table")
    p.add_argument("--corpus", required=True)
    p.add_argument("--classifiers")
    _add_model_flags(p)
    _add_cv_flags(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("pipeline", help="run every stage from one config file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dump")
    p.add_argument("--log", dest="block_log")
    p.add_argument("--timeframe")

    for action in sub.choices.values():
        _add_common(action)
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    overrides = {key: getattr(args, key) for key in OPTIONS if getattr(args, key, None) is not None}
    return load_config(args.config, overrides=overrides)


def _require(cfg: dict, key: str, flag: str) -> str:
    if not cfg.get(key):
        raise UsageError(f"missing input: give {flag} or set {key} in the config")
    return cfg[key]


def _manifest_path(args) -> Path:
    if args.manifest:
        return Path(args.manifest)
    if getattr(args, "out_dir", None):
        return Path(args.out_dir) / "manifest.json"
    if getattr(args, "model_dir", None):
        return Path(args.model_dir) / "manifest.json"
    return Path(str(args.out) + ".manifest.json")


def _run_command(args, cfg, man: Manifest) -> None:
    c = args.command
    if c == "extract-afd":
        stage_extract_afd(cfg, _require(cfg, "dump", "--dump"), args.out, man)
    elif c == "extract-blocks":
        stage_extract_blocks(cfg, _require(cfg, "block_log", "--log"), args.out, man)
    elif c == "attribute":
        stage_attribute(cfg, args.pages, args.out, man)
    elif c == "clean":
        stage_clean(cfg, args.posts, args.out, man)
    elif c == "filter-blocks":
        stage_filter_blocks(cfg, args.blocks, args.out, man)
    elif c == "label":
        stage_label(cfg, args.posts, args.blocks, args.out, man)
    elif c == "window":
        stage_window(cfg, args.posts, args.out, man)
    elif c == "sample":
        stage_sample(cfg, args.posts, args.out, man)
    elif c == "train":
        stage_train(cfg, args.corpus, args.classifier, args.model_dir, man)
    elif c == "evaluate":
        stage_evaluate(cfg, args.corpus, [args.classifier], args.out, man, args.predictions_dir)
    elif c == "sweep":
        if not cfg["timeframes"]:
            raise UsageError("sweep needs --timeframes")
        stage_sweep(cfg, args.posts, args.out, man)
    elif c == "stats":
        stage_stats(cfg, args.corpus, args.out, man, args.lengths_out, args.posts, args.blocks, args.deltas_out)
    elif c == "report":
        stage_evaluate(cfg, args.corpus, cfg["classifiers"], args.out, man)


def run_pipeline(cfg: dict, out_dir, man: Manifest) -> None:
    """All stages in order; the manifest records each finished stage."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump = _require(cfg, "dump", "--dump")
    log = _require(cfg, "block_log", "--log")
    corpus = out / ("merged.jsonl" if cfg["sliding_window"] else "labeled.jsonl")
    steps: list[tuple[str, Callable[[], Any]]] = [
        ("extract-afd", lambda: stage_extract_afd(cfg, dump, out / "pages.jsonl", man)),
        ("attribute", lambda: stage_attribute(cfg, out / "pages.jsonl", out / "raw_posts.jsonl", man)),
        ("clean", lambda: stage_clean(cfg, out / "raw_posts.jsonl", out / "clean_posts.jsonl", man)),
        ("extract-blocks", lambda: stage_extract_blocks(cfg, log, out / "blocks.tsv", man)),
        ("filter-blocks", lambda: stage_filter_blocks(cfg, out / "blocks.tsv", out / "blocks_filtered.tsv", man)),
        (
            "label",
            lambda: stage_label(cfg, out / "clean_posts.jsonl", out / "blocks_filtered.tsv", out / "labeled.jsonl", man),
        ),
    ]
    if cfg["sliding_window"]:
        steps.append(("window", lambda: stage_window(cfg, out / "labeled.jsonl", out / "merged.jsonl", man)))
    steps += [
        (
            "stats",
            lambda: stage_stats(
                cfg,
                out / "labeled.jsonl",
                out / "stats.tsv",
                man,
                out / "lengths.csv",
                out / "clean_posts.jsonl",
                out / "blocks_filtered.tsv",
                out / "deltas.csv",
            ),
        ),
        ("sample", lambda: stage_sample(cfg, corpus, out / "sample.jsonl", man)),
        ("report", lambda: stage_evaluate(cfg, out / "sample.jsonl", cfg["classifiers"], out / "report.tsv", man)),
    ]
    for name in cfg["classifiers"]:
        steps.append(
            (f"train-{name}", lambda name=name: stage_train(cfg, out / "sample.jsonl", name, out / "models" / name, man))
        )
    if cfg["timeframes"]:
        steps.append(("sweep", lambda: stage_sweep(cfg, out / "labeled.jsonl", out / "sweep.tsv", man)))
    for name, step in steps:
        man.data["current_stage"] = name
        step()
        man.data["stages"].append(name)
    man.data.pop("current_stage", None)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _resolve(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    man = Manifest(args.command, argv, cfg)
    man_path = _manifest_path(args)
    status = EXIT_OK
    try:
        if args.command == "pipeline":
            run_pipeline(cfg, args.out_dir, man)
        else:
            _run_command(args, cfg, man)
        man.data["status"] = "ok"
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        man.data.update(status="failed", error=str(exc))
        status = EXIT_USAGE
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        man.data.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        man.data["failed_stage"] = man.data.pop("current_stage", args.command)
        status = EXIT_DATA
    try:
        man.write(man_path)
    except OSError as exc:
        print(f"warning: could not write manifest {man_path}: {exc}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
