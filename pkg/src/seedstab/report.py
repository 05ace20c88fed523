"""Rendering stability reports as Markdown, CSV or JSON, and reading them back.

Markdown shows values as percentages with two decimals and the spread in
parentheses, e.g. ``90.34 (±0.89)``.  CSV and JSON keep full double
precision in the report's own units so downstream tools lose nothing.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from seedstab.errors import InputFileNotFound, ParseError, SchemaError
from seedstab.model import MetricKind, PairConsistency, StabilityReport

FORMATS = ("md", "csv", "json")

METRIC_LABELS = {
    MetricKind.ACCURACY: "Accuracy",
    MetricKind.PRECISION: "P",
    MetricKind.RECALL: "R",
    MetricKind.F1: "F1",
    MetricKind.MCC: "MCC",
    MetricKind.MAE: "MAE",
    MetricKind.MSE: "MSE",
    MetricKind.PEARSON: "Pearson",
    MetricKind.SPEARMAN: "Spearman",
    MetricKind.EXACT_MATCH: "EM",
    MetricKind.TOKEN_F1: "Token F1",
}

CSV_HEADER = ["task", "metric", "seed", "zeta", "var", "con", "ccon"]


@dataclass(frozen=True)
class RenderedReport:
    format: str
    body: str


def scorer_percent_scaled(scorer: str) -> bool:
    return scorer not in (MetricKind.MAE.value, MetricKind.MSE.value)


def display_values(report: StabilityReport) -> tuple[float, float, float, float]:
    """zeta_mean, VAR, CON, CCON in display units (percent where meaningful)."""
    zf = 100.0 if report.metric.percent_scaled else 1.0
    cf = 100.0 if scorer_percent_scaled(report.scorer) else 1.0
    return report.zeta_mean * zf, report.var, report.con_mean * cf, report.ccon_mean * cf


def summary_line(report: StabilityReport) -> str:
    zeta, var, con, ccon = display_values(report)
    return f"{report.task} {zeta:.2f} {var:.2f} {con:.2f} {ccon:.2f}"


def _cell(value: float, spread: float | None) -> str:
    if spread is None:
        return f"{value:.2f}"
    return f"{value:.2f} (±{spread:.2f})"


def _render_markdown(report: StabilityReport) -> str:
    zeta, var, con, ccon = display_values(report)
    zf = 100.0 if report.metric.percent_scaled else 1.0
    cf = 100.0 if scorer_percent_scaled(report.scorer) else 1.0
    label = METRIC_LABELS[report.metric]
    lines = [
        f"# Seed stability: {report.task}",
        "",
        f"| Task | {label} | CON | CCON |",
        "| --- | --- | --- | --- |",
        f"| {report.task} | {_cell(zeta, var)} | {_cell(con, report.con_var)} "
        f"| {_cell(ccon, report.ccon_var)} |",
        "",
    ]
    facts = [f"seeds: {report.n_seeds}", f"pairs: {len(report.pairs)}"]
    if report.n_examples is not None:
        facts.append(f"examples: {report.n_examples}")
    facts.append(f"scorer: {report.scorer}")
    lines.append(", ".join(facts) + ".")
    lines.append(
        "Parenthesised values are population standard deviations across seeds "
        "(metric) and across seed pairs (CON, CCON)."
    )
    if report.zeta_per_seed:
        lines += ["", f"## {label} per seed", "", f"| Seed | {label} |", "| --- | --- |"]
        for seed in report.seeds:
            lines.append(f"| {seed} | {report.zeta_per_seed[seed] * zf:.2f} |")
    if report.pairs:
        lines += ["", "## Seed pairs", "", "| Seed A | Seed B | CON | CCON |",
                  "| --- | --- | --- | --- |"]
        for p in report.pairs:
            lines.append(f"| {p.seed_a} | {p.seed_b} | {p.con * cf:.2f} | {p.ccon * cf:.2f} |")
    return "\n".join(lines) + "\n"


def _render_csv(report: StabilityReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    metric = report.metric.value
    for seed in report.seeds:
        writer.writerow([report.task, metric, seed, repr(report.zeta_per_seed[seed]), "", "", ""])
    writer.writerow([report.task, metric, "mean", repr(report.zeta_mean), repr(report.var),
                     repr(report.con_mean), repr(report.ccon_mean)])
    return buf.getvalue()


def report_to_dict(report: StabilityReport) -> dict[str, Any]:
    return {
        "task": report.task,
        "metric": report.metric.value,
        "orientation": report.orientation.value,
        "scorer": report.scorer,
        "n_seeds": report.n_seeds,
        "n_examples": report.n_examples,
        "train_size": report.train_size,
        "zeta_per_seed": {str(s): report.zeta_per_seed[s] for s in sorted(report.zeta_per_seed)},
        "zeta_mean": report.zeta_mean,
        "var": report.var,
        "var_scale": report.var_scale,
        "gold_agreement": {str(s): report.gold_agreement[s] for s in sorted(report.gold_agreement)},
        "pairs": [
            {"seed_a": p.seed_a, "seed_b": p.seed_b, "con": p.con, "ccon": p.ccon}
            for p in report.pairs
        ],
        "con_mean": report.con_mean,
        "ccon_mean": report.ccon_mean,
        "con_var": report.con_var,
        "ccon_var": report.ccon_var,
    }


_REQUIRED = ("task", "metric", "scorer", "n_seeds", "zeta_mean", "var", "con_mean", "ccon_mean")
_OPTIONAL = ("orientation", "n_examples", "train_size", "zeta_per_seed", "var_scale",
             "gold_agreement", "pairs", "con_var", "ccon_var")


def _num(doc: dict, key: str, where: str, optional: bool = False) -> float | None:
    value = doc.get(key)
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(key, "must be a number", where)
    return float(value)


def _int(doc: dict, key: str, where: str, optional: bool = False) -> int | None:
    value = doc.get(key)
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(key, "must be an integer", where)
    return value


def _seed_map(doc: dict, key: str, where: str) -> dict[int, float]:
    raw = doc.get(key) or {}
    if not isinstance(raw, dict):
        raise SchemaError(key, "must be an object keyed by seed", where)
    out = {}
    for k, v in raw.items():
        try:
            seed = int(k)
        except ValueError:
            raise SchemaError(key, f"seed key {k!r} is not an integer", where) from None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"{key}.{k}", "must be a number", where)
        out[seed] = float(v)
    return dict(sorted(out.items()))


def report_from_dict(doc: Any, where: str = "<report>") -> StabilityReport:
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "report must be a JSON object", where)
    for key in doc:
        if key not in _REQUIRED and key not in _OPTIONAL:
            raise SchemaError(key, "unknown field", where)
    for key in _REQUIRED:
        if key not in doc:
            raise SchemaError(key, "missing required field", where)
    try:
        metric = MetricKind(doc["metric"])
    except ValueError:
        raise SchemaError("metric", f"unknown metric {doc['metric']!r}", where) from None
    if "orientation" in doc and doc["orientation"] != metric.orientation.value:
        raise SchemaError("orientation", f"{metric.value} is {metric.orientation.value}", where)
    if not isinstance(doc["task"], str) or not isinstance(doc["scorer"], str):
        raise SchemaError("task", "task and scorer must be strings", where)

    pairs = []
    raw_pairs = doc.get("pairs") or []
    if not isinstance(raw_pairs, list):
        raise SchemaError("pairs", "must be an array", where)
    for i, p in enumerate(raw_pairs):
        if not isinstance(p, dict) or set(p) != {"seed_a", "seed_b", "con", "ccon"}:
            raise SchemaError(f"pairs[{i}]", "needs exactly seed_a, seed_b, con, ccon", where)
        pairs.append(PairConsistency(
            seed_a=_int(p, "seed_a", where), seed_b=_int(p, "seed_b", where),
            con=_num(p, "con", where), ccon=_num(p, "ccon", where),
        ))

    n_seeds = _int(doc, "n_seeds", where)
    zeta = _seed_map(doc, "zeta_per_seed", where)
    if zeta and len(zeta) != n_seeds:
        raise SchemaError("zeta_per_seed", f"has {len(zeta)} seeds but n_seeds is {n_seeds}", where)
    if pairs and len(pairs) != n_seeds * (n_seeds - 1) // 2:
        raise SchemaError("pairs", f"expected {n_seeds * (n_seeds - 1) // 2} pairs, got {len(pairs)}", where)
    var_scale = doc.get("var_scale", "percent")
    if var_scale not in ("percent", "raw"):
        raise SchemaError("var_scale", "must be 'percent' or 'raw'", where)

    return StabilityReport(
        task=doc["task"],
        metric=metric,
        scorer=doc["scorer"],
        n_seeds=n_seeds,
        n_examples=_int(doc, "n_examples", where, optional=True),
        train_size=_int(doc, "train_size", where, optional=True),
        zeta_per_seed=zeta,
        zeta_mean=_num(doc, "zeta_mean", where),
        var=_num(doc, "var", where),
        var_scale=var_scale,
        gold_agreement=_seed_map(doc, "gold_agreement", where),
        pairs=tuple(pairs),
        con_mean=_num(doc, "con_mean", where),
        ccon_mean=_num(doc, "ccon_mean", where),
        con_var=_num(doc, "con_var", where, optional=True),
        ccon_var=_num(doc, "ccon_var", where, optional=True),
    )


def render_report(report: StabilityReport, format: str = "md") -> RenderedReport:
    if format == "md":
        body = _render_markdown(report)
    elif format == "csv":
        body = _render_csv(report)
    elif format == "json":
        body = json.dumps(report_to_dict(report), indent=2, ensure_ascii=False, allow_nan=False) + "\n"
    else:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")
    return RenderedReport(format=format, body=body)


def load_reports(path: str | Path) -> list[StabilityReport]:
    """Read a JSON report file holding one report object or an array of them."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputFileNotFound(str(path)) from None
    except UnicodeDecodeError:
        raise ParseError("not valid UTF-8", str(path)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, str(path), exc.lineno, exc.colno) from None
    if isinstance(doc, list):
        return [report_from_dict(d, f"{path}[{i}]") for i, d in enumerate(doc)]
    return [report_from_dict(doc, str(path))]
