"""Command-line entry point: ``doccorpus {pipeline,dedup,stats,carbon}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import stats
from .dedup import dedup_corpus_file
from .pipeline import ConfigError, build_config, read_config_file, run

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_RECORD_ERRORS = 2

REPORTS = ("sizes", "annotations", "cooccurrence", "term", "lengths")


def _add_pipeline(sub) -> None:
    p = sub.add_parser("pipeline", help="build per-language corpora from WET files")
    p.add_argument("--config", type=Path, help="key=value file; flags override it")
    p.add_argument("--input", nargs="+", help="WET files (plain or gzip) or fixture directories")
    p.add_argument("--model", help="fastText model, or a .tsv rule file")
    p.add_argument("--blocklist", help="UT1 root or category directory")
    p.add_argument("--output", help="output directory")
    p.add_argument("--workers", type=int)
    p.add_argument("--line-threshold", type=float)
    p.add_argument("--doc-threshold", type=float)
    p.add_argument("--short-chars", type=int)
    p.add_argument("--keep-rejected", action="store_true", default=None)
    p.add_argument("--max-error-rate", type=float,
                   help="exit with status 2 above this share of failed records")


def _add_dedup(sub) -> None:
    p = sub.add_parser("dedup", help="remove duplicate lines from a line-oriented file")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--verify-bytes", action="store_true",
                   help="compare full lines on digest hits")


def _add_stats(sub) -> None:
    p = sub.add_parser("stats", help="audit reports over a pipeline output directory")
    p.add_argument("report", choices=REPORTS)
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument("--term")
    p.add_argument("--threshold", type=int, default=stats.COOCCURRENCE_DISPLAY_THRESHOLD)
    p.add_argument("--format", choices=("json", "tsv"), default="json")
    p.add_argument("--out", type=Path, help="also write <out>.json and <out>.tsv")


def _add_carbon(sub) -> None:
    p = sub.add_parser("carbon", help="energy and CO2 estimate of a run")
    p.add_argument("--hours", type=float, required=True)
    p.add_argument("--cpus", type=int, required=True)
    p.add_argument("--cpu-watts", type=float, required=True)
    p.add_argument("--dram-watts", type=float, required=True)
    p.add_argument("--pue", type=float, default=stats.DEFAULT_PUE)
    p.add_argument("--intensity", type=float, default=stats.DEFAULT_INTENSITY,
                   help="kg CO2e per kWh")
    p.add_argument("--format", choices=("json", "tsv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="doccorpus")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_pipeline(sub)
    _add_dedup(sub)
    _add_stats(sub)
    _add_carbon(sub)
    return parser


def _emit(name: str, report, fmt: str, out: Optional[Path] = None) -> None:
    as_json = json.dumps(stats.report_to_json(name, report), indent=2, ensure_ascii=False)
    as_tsv = stats.format_tsv(*stats.report_rows(name, report))
    sys.stdout.write(as_json + "\n" if fmt == "json" else as_tsv)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{out}.json").write_text(as_json + "\n", encoding="utf-8")
        Path(f"{out}.tsv").write_text(as_tsv, encoding="utf-8")


def cmd_pipeline(args) -> int:
    values = read_config_file(args.config) if args.config else {}
    for key in ("input", "model", "blocklist", "output", "workers", "line_threshold",
                "doc_threshold", "short_chars", "keep_rejected", "max_error_rate"):
        value = getattr(args, key)
        if value is not None:
            values[key.replace("_", "-")] = value
    config = build_config(values)
    report = run(config)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    if report.error_rate > config.max_error_rate:
        logging.error("record error rate %.4f exceeds %.4f", report.error_rate, config.max_error_rate)
        return EXIT_RECORD_ERRORS
    return EXIT_OK


def cmd_dedup(args) -> int:
    report = dedup_corpus_file(args.input, args.output, verify_bytes=args.verify_bytes)
    print(json.dumps(report.to_dict()))
    return EXIT_OK


def cmd_stats(args) -> int:
    counts = stats.ReadCounts()
    records = stats.iter_corpus(args.corpus, counts)
    if args.report == "sizes":
        report = stats.corpus_size_report(records)
    elif args.report == "annotations":
        report = stats.annotation_distribution(records)
    elif args.report == "cooccurrence":
        report = stats.cooccurrence_report(stats.language_cooccurrence(records), args.threshold)
    elif args.report == "term":
        if not args.term:
            raise ConfigError("the term report needs --term")
        report = {"term": args.term, "count": stats.term_count(records, args.term)}
    else:
        report = stats.clean_length_stats(records)
    if counts.unreadable:
        logging.warning("skipped %d unreadable records", counts.unreadable)
    _emit(args.report, report, args.format, args.out)
    return EXIT_OK


def cmd_carbon(args) -> int:
    params = stats.CarbonParams(
        runtime_hours=args.hours,
        cpu_count=args.cpus,
        cpu_power_watts=args.cpu_watts,
        dram_power_watts=args.dram_watts,
        pue=args.pue,
        intensity_kg_per_kwh=args.intensity,
    )
    kwh = stats.power_consumption(params)
    kg = stats.co2e(kwh, params.intensity_kg_per_kwh)
    _emit("carbon", {"kwh": kwh, "co2e_kg": kg, "co2e_g": kg * 1000}, args.format)
    return EXIT_OK


COMMANDS = {"pipeline": cmd_pipeline, "dedup": cmd_dedup, "stats": cmd_stats, "carbon": cmd_carbon}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"doccorpus {args.command}: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
