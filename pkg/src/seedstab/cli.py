"""Command-line interface.

Usage:
    seedstab eval --manifest run.json --out report.md [--format md|csv|json]
    seedstab correlate r1.json r2.json r3.json --sizes sizes.json [--transform raw|log10] [--out table.csv]
    seedstab heatmap r1.json r2.json --out heatmap.csv
    seedstab validate report.json

Exit status is 0 on success, 1 when ``validate`` finds violations, and 2 on
any input or usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Sequence

from seedstab.analysis import TRANSFORMS, heatmap_matrix, size_correlations, validate_report
from seedstab.errors import DuplicateTask, InputFileNotFound, ParseError, SchemaError, SeedStabError
from seedstab.ingest import assemble, load_manifest
from seedstab.model import StabilityReport
from seedstab.report import FORMATS, load_reports, render_report, summary_line
from seedstab.stability import aggregate_stability, scorer_from_name

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_ERROR = 2


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _gather_reports(paths: Sequence[str]) -> list[StabilityReport]:
    reports: list[StabilityReport] = []
    seen: set[str] = set()
    for path in paths:
        for rep in load_reports(path):
            if rep.task in seen:
                raise DuplicateTask(rep.task)
            seen.add(rep.task)
            reports.append(rep)
    return reports


def load_sizes(path: str | Path) -> dict[str, int]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputFileNotFound(str(path)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, str(path), exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "sizes file must map task names to integers", str(path))
    for task, size in doc.items():
        if isinstance(size, bool) or not isinstance(size, int) or size <= 0:
            raise SchemaError(task, "training size must be a positive integer", str(path))
    return doc


def cmd_eval(manifest_path: str, out_path: str, format: str = "md") -> int:
    manifest = load_manifest(manifest_path)
    run_set = assemble(manifest)
    report = aggregate_stability(run_set, manifest.metric, scorer_from_name(manifest.scorer))
    _write(out_path, render_report(report, format).body)
    print(summary_line(report))
    return EXIT_OK


def cmd_correlate(report_paths: Sequence[str], sizes_path: str, transform: str = "log10",
                  out_path: str | None = None) -> int:
    reports = _gather_reports(report_paths)
    sizes = load_sizes(sizes_path)
    summary = size_correlations(reports, sizes, transform)
    print(f"transform {summary.size_transform}")
    print(f"r_var {summary.r_var:.4f}")
    print(f"r_con {summary.r_con:.4f}")
    print(f"r_ccon {summary.r_ccon:.4f}")
    if out_path is not None:
        rows = sorted(reports, key=lambda r: (sizes[r.task], r.task))
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["task", "size", "var", "con", "ccon"])
        for r in rows:
            writer.writerow([r.task, sizes[r.task], repr(r.var), repr(r.con_mean), repr(r.ccon_mean)])
        _write(out_path, buf.getvalue())
    return EXIT_OK


def cmd_heatmap(report_paths: Sequence[str], out_path: str) -> int:
    tasks, seeds, rows = heatmap_matrix(_gather_reports(report_paths))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["task"] + [str(s) for s in seeds])
    for task, row in zip(tasks, rows):
        writer.writerow([task] + [f"{v:.4f}" for v in row])
    _write(out_path, buf.getvalue())
    return EXIT_OK


def cmd_validate(report_path: str) -> int:
    reports = load_reports(report_path)
    violations = []
    for rep in reports:
        violations += [f"{rep.task}: {v}" for v in validate_report(rep)]
    if violations:
        for v in violations:
            print(v)
        return EXIT_VIOLATIONS
    print("OK")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seedstab",
        description="Seed sensitivity of fine-tuned models from per-seed prediction files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="compute zeta, VAR, CON and CCON for one task")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=FORMATS, default="md")

    p = sub.add_parser("correlate", help="correlate training size with VAR, CON, CCON")
    p.add_argument("reports", nargs="+")
    p.add_argument("--sizes", required=True)
    p.add_argument("--transform", choices=TRANSFORMS, default="log10")
    p.add_argument("--out", help="write per-task rows sorted by training size as CSV")

    p = sub.add_parser("heatmap", help="per-task min-max normalised zeta across seeds")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", required=True)

    p = sub.add_parser("validate", help="check consistency relations of a JSON report")
    p.add_argument("report")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "eval":
            return cmd_eval(args.manifest, args.out, args.format)
        if args.command == "correlate":
            return cmd_correlate(args.reports, args.sizes, args.transform, args.out)
        if args.command == "heatmap":
            return cmd_heatmap(args.reports, args.out)
        return cmd_validate(args.report)
    except SeedStabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
