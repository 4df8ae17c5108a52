"""Operator-facing command line: generate, stats, check, bench, seed."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import codecheck, dedup, fsap, pipeline, stats
from .config import CONFIG_ENV, load_config
from .errors import NngenError
from .registry import Registry

log = logging.getLogger(__name__)


def atomic_write_text(path: Path, content: str) -> None:
    """Write via temp file + rename so interrupted runs never truncate."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf).writerows(rows)
    return buf.getvalue()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nngen",
        description="Generate, validate, and evaluate LLM-produced architectures.",
    )
    parser.add_argument(
        "--config",
        default=None,
        help=f"path to JSON config (default: ${CONFIG_ENV} or built-in defaults)",
    )
    parser.add_argument("--output-dir", default=None, help="override config output_dir")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="run a generation campaign")
    p.add_argument("--dataset", required=True)
    p.add_argument("--n", type=int, required=True, choices=range(1, 7),
                   metavar="{1..6}", help="number of supporting examples")
    p.add_argument("--count", type=int, required=True, help="generation slots (>= 0)")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("stats", help="emit balanced-mean, per-dataset, significance tables")
    p.add_argument("--input", required=True, help="CSV of variant,dataset,accuracy")
    p.add_argument("--baseline", default="alt-nn1")
    p.add_argument("--min-samples", type=int, default=stats.DEFAULT_MIN_SAMPLES)

    p = sub.add_parser("check", help="validate a code file and test its uniqueness")
    p.add_argument("file", help="path to the code file")

    p = sub.add_parser("bench", help="benchmark dedup latency on a corpus")
    p.add_argument("corpus", help="a code file or a directory of .py files")

    p = sub.add_parser("seed", help="seed the registry with bundled or custom models")
    p.add_argument("--fixture", default=None, help="line-delimited seed fixture")

    return parser


def _cmd_generate(args, config, out_dir: Path) -> int:
    if args.count < 0:
        print("error: --count must be >= 0", file=sys.stderr)
        return 2
    registry = Registry(config.store_path)
    run_log_path = out_dir / f"run-{args.dataset}-n{args.n}-seed{args.seed}.log.jsonl"
    run_log_path.parent.mkdir(parents=True, exist_ok=True)
    with pipeline.RunLog(run_log_path) as run_log:
        report = pipeline.run_campaign(
            args.dataset,
            args.n,
            args.count,
            args.seed,
            config,
            registry=registry,
            run_log=run_log,
        )
    report_path = out_dir / f"report-{args.dataset}-n{args.n}-seed{args.seed}.json"
    atomic_write_text(report_path, report.to_json())
    print(
        f"requested={report.requested} trained={report.trained} "
        f"duplicates_rejected={report.duplicates_rejected} "
        f"validation_failures={report.validation_failures} "
        f"gpu_hours_saved={report.gpu_hours_saved}"
    )
    print(f"report: {report_path}")
    print(f"log:    {run_log_path}")
    return 0


def _cmd_stats(args, config, out_dir: Path) -> int:
    table = stats.AccuracyTable.from_csv(args.input)
    if args.baseline not in table.variants():
        print(
            f"error: baseline variant {args.baseline!r} has no records in {args.input}",
            file=sys.stderr,
        )
        return 1

    balanced_text, balanced_csv = stats.render_balanced_table(table, args.min_samples)
    per_ds_text, per_ds_csv = stats.render_per_dataset_table(table)
    sig = stats.significance_table(table, args.baseline)
    sig_text, sig_csv = stats.render_significance_table(sig)

    for name, text, rows in (
        ("balanced_mean", balanced_text, balanced_csv),
        ("per_dataset", per_ds_text, per_ds_csv),
        ("significance", sig_text, sig_csv),
    ):
        atomic_write_text(out_dir / f"{name}.txt", text)
        atomic_write_text(out_dir / f"{name}.csv", _csv_text(rows))
    print(balanced_text)
    print(per_ds_text)
    print(sig_text)
    print(f"reports written to {out_dir}")
    return 0


def _cmd_check(args, config, out_dir: Path) -> int:
    code = Path(args.file).read_text(encoding="utf-8")
    report = codecheck.validate(code)
    if not report.passed:
        print(f"INVALID: {len(report.violations)} violation(s)")
        for v in report.violations:
            where = f" (line {v.line})" if v.line else ""
            print(f"  {v.rule}: {v.message}{where}")
        return 1
    registry = Registry(config.store_path)
    fp = dedup.fingerprint(code)
    if dedup.check_unique(code, registry) is dedup.Decision.REJECT:
        print(f"REJECT duplicate of {fp.digest}")
        return 1
    print(f"ACCEPT unique ({fp.digest})")
    return 0


def _cmd_bench(args, config, out_dir: Path) -> int:
    corpus_path = Path(args.corpus)
    if corpus_path.is_dir():
        files = sorted(corpus_path.glob("*.py"))
        corpus = [f.read_text(encoding="utf-8") for f in files]
    elif corpus_path.is_file():
        corpus = [corpus_path.read_text(encoding="utf-8")]
    else:
        print(f"error: corpus path {corpus_path} does not exist", file=sys.stderr)
        return 2
    if not corpus:
        print(f"error: no .py files in {corpus_path}", file=sys.stderr)
        return 2
    report = dedup.benchmark_latency(corpus)
    atomic_write_text(out_dir / "bench.txt", report.to_text())
    atomic_write_text(out_dir / "bench.csv", report.to_csv())
    print(report.to_text(), end="")
    return 0


def _cmd_seed(args, config, out_dir: Path) -> int:
    registry = Registry(config.store_path)
    inserted = pipeline.seed_registry(registry, args.fixture)
    print(f"inserted {inserted} seed model(s) into {config.store_path}")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "stats": _cmd_stats,
    "check": _cmd_check,
    "bench": _cmd_bench,
    "seed": _cmd_seed,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"error: cannot load config: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.output_dir or config.output_dir)
    try:
        return _COMMANDS[args.command](args, config, out_dir)
    except NngenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
