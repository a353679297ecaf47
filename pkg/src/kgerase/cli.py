"""Command-line interface: ``kgerase <subcommand>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from kgerase.config import REWRITERS, EXTRACTORS, SCOPES, RunConfig, load_config
from kgerase.corpus import SynthSpec, generate_synthetic, ingest
from kgerase.errors import KgEraseError
from kgerase.partition import STRATEGIES
from kgerase.pipeline import (
    INFER_FILE,
    PARTITIONS_FILE,
    SPECIAL_FILE,
    load_manifest,
    prepare,
    report,
    reward_trace,
    run_downstream_qa,
    run_erasure_eval,
)
from kgerase.testsets import write_manifest


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ratio", type=float)
    p.add_argument("--strategy", choices=STRATEGIES)


def _add_globals(p: argparse.ArgumentParser, default) -> None:
    p.add_argument("--config", default=default, help="key = value config file")
    p.add_argument("--seed", type=int, default=default)
    p.add_argument("--out", default=default, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true", default=default or False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgerase", description=__doc__)
    _add_globals(parser, None)
    # global flags are accepted after the subcommand too
    common = argparse.ArgumentParser(add_help=False)
    _add_globals(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, **kw) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], **kw)

    p = add("ingest", help="validate a corpus directory")
    p.add_argument("corpus")

    p = add("synth", help="generate a synthetic corpus")
    p.add_argument("--queries", type=int, default=4)
    p.add_argument("--docs", type=int, default=10)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--decoys", type=int, default=1)
    p.add_argument("--fillers", type=int, default=12)
    p.add_argument("--planted-queries", type=int)
    p.add_argument("--no-special", action="store_true")

    p = add("partition", help="partition every query group")
    p.add_argument("corpus", nargs="?")
    _add_run_options(p)

    p = add("testsets", help="build the special and inference-risk test sets")
    p.add_argument("corpus", nargs="?")
    _add_run_options(p)

    p = add("evaluate", help="run an erasure evaluation")
    p.add_argument("corpus", nargs="?")
    _add_run_options(p)
    p.add_argument("--rewriter", choices=REWRITERS)
    p.add_argument("--scope", choices=SCOPES)
    p.add_argument("--extractor", choices=EXTRACTORS)
    p.add_argument("--sidecar")
    p.add_argument("--endpoint")
    p.add_argument("--iteration", type=int)
    p.add_argument("--manifest", help="replay the config stored in a previous run")
    p.add_argument("--run-dir", help="write into this directory instead of a timestamped one")

    p = add("qa", help="downstream QA accuracy on a finished run")
    p.add_argument("run_dir")
    p.add_argument("--endpoint")

    p = add("reward-trace", help="per-document and mean reward at an iteration")
    p.add_argument("report", nargs="?", default="-", help="documents.jsonl, a run directory, or - for stdin")
    p.add_argument("--iteration", type=int, default=0)

    p = add("report", help="compare finished runs")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--format", choices=("json", "table"), default="table")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    cfg = load_manifest(args.manifest) if getattr(args, "manifest", None) else load_config(args.config)
    overrides = {
        "seed": args.seed,
        "out": args.out,
        "corpus": getattr(args, "corpus", None),
        "ratio": getattr(args, "ratio", None),
        "strategy": getattr(args, "strategy", None),
        "rewriter": getattr(args, "rewriter", None),
        "scope": getattr(args, "scope", None),
        "extractor": getattr(args, "extractor", None),
        "sidecar": getattr(args, "sidecar", None),
        "endpoint": getattr(args, "endpoint", None),
        "iteration": getattr(args, "iteration", None),
    }
    return cfg.with_overrides(**overrides)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _out_dir(args, default: str) -> Path:
    out = Path(args.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _dispatch(args)
    except KgEraseError as exc:
        print(f"kgerase: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def _dispatch(args: argparse.Namespace) -> int:
    cmd = args.command
    if cmd == "ingest":
        groups = ingest(args.corpus)
        _emit({
            "groups": len(groups),
            "docs": sum(len(g.docs) for g in groups),
            "triples": sum(len(d.triples) for g in groups for d in g.docs),
        })
    elif cmd == "synth":
        spec = SynthSpec(
            queries=args.queries, docs_per_query=args.docs, chains=args.chains, decoys=args.decoys,
            fillers=args.fillers, with_special=not args.no_special, planted_queries=args.planted_queries,
        )
        out = generate_synthetic(spec, args.seed or 0, args.out or "synth-corpus")
        print(out)
    elif cmd in ("partition", "testsets"):
        cfg = _config(args)
        states = prepare(ingest(cfg.corpus), cfg)
        out = _out_dir(args, cmd)
        if cmd == "partition":
            with open(out / PARTITIONS_FILE, "w", encoding="utf-8") as fh:
                for st in states:
                    row = {"query_id": st.group.query.query_id, "skipped": st.skipped,
                           "partition": st.partition.to_dict() if st.partition else None}
                    fh.write(json.dumps(row, sort_keys=True) + "\n")
            _emit({"groups": len(states), "skipped": sum(st.skipped is not None for st in states),
                   "path": str(out / PARTITIONS_FILE)})
        else:
            special = [m for st in states for m in st.special]
            infer = [st.infer for st in states if st.infer is not None]
            write_manifest(out / SPECIAL_FILE, special)
            write_manifest(out / INFER_FILE, infer)
            _emit({"special": len(special), "infer": len(infer), "dir": str(out)})
    elif cmd == "evaluate":
        cfg = _config(args)
        rep = run_erasure_eval(cfg, run_dir=args.run_dir)
        _emit({"run_dir": str(rep.run_dir), "aggregate": rep.aggregate})
    elif cmd == "qa":
        cfg = load_manifest(args.run_dir)
        if args.endpoint:
            cfg = cfg.with_overrides(endpoint=args.endpoint)
        _emit(run_downstream_qa(cfg, args.run_dir))
    elif cmd == "reward-trace":
        cfg = load_config(args.config)
        src = args.report
        if src != "-" and Path(src).is_dir():
            src = str(Path(src) / "documents.jsonl")
        fh = sys.stdin if src == "-" else open(src, encoding="utf-8")
        try:
            records = [json.loads(line) for line in fh if line.strip()]
        finally:
            if fh is not sys.stdin:
                fh.close()
        _emit(reward_trace(records, args.iteration, cfg.reward_params))
    elif cmd == "report":
        sys.stdout.write(report(args.run_dirs, args.format))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
