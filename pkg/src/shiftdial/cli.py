"""Command-line entry point.

Exit codes: 0 success, 1 degraded run (too many skipped walks, missing
dialogues, remote failures), 2 invalid input or configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

from shiftdial.errors import ConfigError, GraphLoadError, PipelineError
from shiftdial.kg import load_graph_file
from shiftdial.metrics import (
    DetectionInstance,
    SegmentationInstance,
    dataset_stats,
    detect_metrics,
    seg_metrics,
)
from shiftdial.pipeline import RunConfig, write_dialogues
from shiftdial.postproc import Dialogue, read_dialogues
from shiftdial.qgen import ChatClient, ChatGenerator, StubGenerator
from shiftdial.retrieval import LocalRetriever, RemoteRetriever

logger = logging.getLogger("shiftdial")

EXIT_OK, EXIT_DEGRADED, EXIT_INVALID = 0, 1, 2

# flag / config-file key -> RunConfig field
_ALIASES = {
    "graph": "graph_path",
    "corpus": "corpus_path",
    "out": "output_path",
    "n": "n_dialogues",
    "model": "model_name",
}


class InputError(Exception):
    pass


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines into RunConfig field values (strings)."""
    known = set(RunConfig.field_names())
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read config file {path}: {e}") from e
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        key = _ALIASES.get(key, key)
        if key not in known:
            raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
        values[key] = value
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults < config file < command-line flags."""
    merged: dict = {}
    if args.config:
        merged.update(read_config_file(args.config))
    for name in RunConfig.field_names():
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    types = {f.name: f.type for f in fields(RunConfig)}
    kwargs = {}
    for name, value in merged.items():
        try:
            if "int" in str(types[name]):
                value = int(value)
            elif "float" in str(types[name]):
                value = float(value)
        except ValueError:
            raise ConfigError(f"{name}: cannot parse {value!r}") from None
        kwargs[name] = value
    cfg = RunConfig(**kwargs)
    cfg.generator = str(cfg.generator).lower()
    return cfg.validate()


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _read_lines(path: str) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e


def load_dialogues(path: str) -> list[Dialogue]:
    try:
        dialogues = list(read_dialogues(_read_lines(path)))
    except ValueError as e:
        raise InputError(f"{path}: {e}") from e
    if not dialogues:
        raise InputError(f"{path}: no dialogues")
    return dialogues


def load_predictions(path: str, key: str) -> dict[str, list]:
    preds = {}
    for line_no, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            preds[str(rec["id"])] = list(rec[key])
        except (ValueError, KeyError, TypeError) as e:
            raise InputError(f"{path}:{line_no}: expected {{'id', '{key}'}} record") from e
    if not preds:
        raise InputError(f"{path}: no predictions")
    return preds


def join_by_id(gold: list[Dialogue], preds: dict[str, list]) -> list[tuple[Dialogue, list]]:
    missing = [d.id for d in gold if d.id not in preds]
    if missing:
        raise InputError(f"predictions missing for {len(missing)} dialogue id(s): {', '.join(missing)}")
    extra = set(preds) - {d.id for d in gold}
    if extra:
        logger.warning("ignoring %d prediction(s) with unknown ids", len(extra))
    return [(d, preds[d.id]) for d in gold]


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    try:
        graph = load_graph_file(cfg.graph_path)
    except OSError as e:
        raise InputError(f"cannot read graph {cfg.graph_path}: {e}") from e

    if cfg.corpus_path:
        try:
            retriever = LocalRetriever.load(cfg.corpus_path)
        except (OSError, ValueError) as e:
            raise InputError(f"cannot read corpus {cfg.corpus_path}: {e}") from e
    else:
        retriever = RemoteRetriever(cfg.remote_base_url, timeout=cfg.remote_timeout,
                                    user_agent=cfg.user_agent, max_in_flight=cfg.concurrency)

    if cfg.generator == "llm":
        generator = ChatGenerator(ChatClient(cfg.model_name, max_in_flight=cfg.concurrency))
    else:
        generator = StubGenerator()

    out_path = Path(cfg.output_path)
    tmp_path = out_path.with_name(out_path.name + ".part")
    try:
        out = open(tmp_path, "w", encoding="utf-8", newline="\n")
    except OSError as e:
        raise InputError(f"cannot write {out_path}: {e}") from e
    try:
        with out:
            summary = write_dialogues(
                out, cfg.n_dialogues, concurrency=cfg.concurrency, graph=graph,
                retriever=retriever, generator=generator, seed=cfg.seed, max_topics=cfg.max_topics,
            )
    except BaseException:
        tmp_path.unlink(missing_ok=True)
        raise
    os.replace(tmp_path, out_path)

    logger.info("wrote %d/%d dialogues to %s (%d of %d walks skipped)", summary.written,
                summary.requested, out_path, summary.walks_skipped, summary.walk_attempts)
    if summary.degraded:
        print(f"degraded run: {summary.written}/{summary.requested} dialogues written, "
              f"{summary.walks_skipped}/{summary.walk_attempts} walks skipped", file=sys.stderr)
        return EXIT_DEGRADED
    return EXIT_OK


def cmd_eval_seg(args: argparse.Namespace) -> int:
    pairs = join_by_id(load_dialogues(args.gold), load_predictions(args.pred, "pred_labels"))
    try:
        instances = [SegmentationInstance(d.segment_labels, [int(x) for x in p]) for d, p in pairs]
    except (ValueError, TypeError) as e:
        raise InputError(str(e)) from e
    report = seg_metrics(instances, average="macro" if args.macro else "micro")
    _emit(report.to_dict(), args.out)
    return EXIT_OK


def cmd_eval_detect(args: argparse.Namespace) -> int:
    pairs = join_by_id(load_dialogues(args.gold), load_predictions(args.pred, "pred_shifts"))
    try:
        instances = [DetectionInstance(d.shift_flags, [bool(x) for x in p]) for d, p in pairs]
    except ValueError as e:
        raise InputError(str(e)) from e
    report = detect_metrics(instances, average="macro" if args.macro else "micro")
    _emit(report.to_dict(), args.out)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    _emit(dataset_stats(load_dialogues(args.dialogues)), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shiftdial", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="synthesize topic-shift dialogues as JSONL")
    gen.add_argument("--config", help="key=value file; command-line flags take precedence")
    gen.add_argument("--graph", dest="graph_path", help="triplet JSONL file")
    src = gen.add_mutually_exclusive_group()
    src.add_argument("--corpus", dest="corpus_path", help="passage JSONL file or directory of .txt files")
    src.add_argument("--remote-base-url", dest="remote_base_url", help="wiki-style API endpoint")
    gen.add_argument("--remote-timeout", type=float)
    gen.add_argument("--user-agent")
    gen.add_argument("--out", dest="output_path")
    gen.add_argument("--n", dest="n_dialogues", type=int)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--max-topics", type=int)
    gen.add_argument("--generator", type=str.lower, choices=["stub", "llm"])
    gen.add_argument("--model", dest="model_name")
    gen.add_argument("--concurrency", type=int)
    gen.set_defaults(func=cmd_generate)

    for name, func, what in (("eval-seg", cmd_eval_seg, "topic segmentation"),
                             ("eval-detect", cmd_eval_detect, "topic shift detection")):
        p = sub.add_parser(name, help=f"score {what} predictions against gold dialogues")
        p.add_argument("gold", help="dialogue JSONL")
        p.add_argument("pred", help="prediction JSONL")
        p.add_argument("--macro", action="store_true", help="macro-average P/R/F1 over dialogues")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.set_defaults(func=func)

    st = sub.add_parser("stats", help="dataset statistics for a dialogue JSONL file")
    st.add_argument("dialogues")
    st.add_argument("--out")
    st.set_defaults(func=cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ConfigError, GraphLoadError, InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except PipelineError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DEGRADED


if __name__ == "__main__":
    sys.exit(main())
