"""Cross-task analyses over stability reports."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from seedstab.errors import (
    DuplicateTask,
    MissingSize,
    RowTooShort,
    SeedSetMismatch,
    TooFewTasks,
    UnsupportedScorerKind,
)
from seedstab.metrics import pearson
from seedstab.model import MetricKind, StabilityReport

TRANSFORMS = ("raw", "log10")

# Slack for comparisons between quantities that are equal in exact arithmetic
# but may differ by rounding after division and averaging.
BOUND_TOL = 1e-12


@dataclass(frozen=True)
class CorrelationSummary:
    r_var: float
    r_con: float
    r_ccon: float
    size_transform: str
    tasks_included: tuple[str, ...]


def _check_unique_tasks(reports: Sequence[StabilityReport]) -> None:
    seen: set[str] = set()
    for rep in reports:
        if rep.task in seen:
            raise DuplicateTask(rep.task)
        seen.add(rep.task)


def transform_size(size: int, transform: str) -> float:
    if transform == "raw":
        return float(size)
    if transform == "log10":
        return math.log10(size)
    raise ValueError(f"transform must be one of {TRANSFORMS}, got {transform!r}")


def size_correlations(reports: Sequence[StabilityReport], sizes: Mapping[str, int],
                      transform: str = "log10") -> CorrelationSummary:
    """Pearson correlation of (transformed) training size with VAR, CON and CCON."""
    if transform not in TRANSFORMS:
        raise ValueError(f"transform must be one of {TRANSFORMS}, got {transform!r}")
    _check_unique_tasks(reports)
    if len(reports) < 3:
        raise TooFewTasks(f"need at least 3 tasks, got {len(reports)}")
    xs = []
    for rep in reports:
        if rep.task not in sizes:
            raise MissingSize(rep.task)
        size = sizes[rep.task]
        if isinstance(size, bool) or not isinstance(size, int) or size <= 0:
            raise ValueError(f"training size for {rep.task!r} must be a positive integer")
        xs.append(transform_size(size, transform))
    return CorrelationSummary(
        r_var=pearson(xs, [r.var for r in reports]),
        r_con=pearson(xs, [r.con_mean for r in reports]),
        r_ccon=pearson(xs, [r.ccon_mean for r in reports]),
        size_transform=transform,
        tasks_included=tuple(r.task for r in reports),
    )


def normalize_heatmap(zeta: Sequence[Sequence[float]]) -> list[list[float]]:
    """Min-max normalise each row to [0, 1]; a constant row becomes all 0.5."""
    out = []
    for i, row in enumerate(zeta):
        vals = [float(v) for v in row]
        if len(vals) < 2:
            raise RowTooShort(f"row {i} has {len(vals)} entr{'y' if len(vals) == 1 else 'ies'}")
        lo, hi = min(vals), max(vals)
        if hi == lo:
            out.append([0.5] * len(vals))
        else:
            span = hi - lo
            out.append([(v - lo) / span for v in vals])
    return out


def heatmap_matrix(reports: Sequence[StabilityReport]) -> tuple[list[str], list[int], list[list[float]]]:
    """Tasks, ascending seeds and normalised per-seed zeta for reports sharing one seed set."""
    _check_unique_tasks(reports)
    if not reports:
        raise TooFewTasks("need at least one report")
    seeds = reports[0].seeds
    for rep in reports[1:]:
        if rep.seeds != seeds:
            raise SeedSetMismatch(
                f"task {rep.task!r} has seeds {rep.seeds}, expected {seeds}"
            )
    rows = [[rep.zeta_per_seed[s] for s in seeds] for rep in reports]
    return [r.task for r in reports], seeds, normalize_heatmap(rows)


def validate_report(report: StabilityReport) -> list[str]:
    """List every violated consistency relation; empty means the report is coherent.

    Checks, for indicator and token-mean scorers:

    - VAR and pair spreads are non-negative,
    - 0 <= CCON <= CON <= 1, in aggregate and for each pair,
    - per pair, with g the gold agreement of each seed:
      max(0, g_a + g_b - 1) <= CCON <= min(g_a, g_b) and CON >= g_a + g_b - 1,
    - in aggregate, CCON_mean <= mean g and CON_mean >= 2 * mean g - 1.

    When per-seed gold agreement is absent (summary-only reports), the
    aggregate bounds use zeta_mean if the metric is accuracy and are skipped
    otherwise.
    """
    if report.scorer not in ("indicator", "token_mean"):
        raise UnsupportedScorerKind(
            f"relational checks apply to indicator/token_mean scorers, not {report.scorer!r}"
        )
    tol = BOUND_TOL
    out: list[str] = []

    for name in ("var", "con_var", "ccon_var"):
        value = getattr(report, name)
        if value is not None and not value >= 0:
            out.append(f"{name} = {value!r} is negative")

    if not report.ccon_mean >= -tol:
        out.append(f"ccon_mean = {report.ccon_mean!r} < 0")
    if not report.ccon_mean <= report.con_mean + tol:
        out.append(f"ccon_mean = {report.ccon_mean!r} > con_mean = {report.con_mean!r}")
    if not report.con_mean <= 1 + tol:
        out.append(f"con_mean = {report.con_mean!r} > 1")

    g = report.gold_agreement
    for p in report.pairs:
        tag = f"pair ({p.seed_a}, {p.seed_b})"
        if not -tol <= p.ccon <= p.con + tol:
            out.append(f"{tag}: ccon = {p.ccon!r} outside [0, con = {p.con!r}]")
        if not p.con <= 1 + tol:
            out.append(f"{tag}: con = {p.con!r} > 1")
        if p.seed_a in g and p.seed_b in g:
            ga, gb = g[p.seed_a], g[p.seed_b]
            if not p.ccon <= min(ga, gb) + tol:
                out.append(f"{tag}: ccon = {p.ccon!r} > min(acc_a, acc_b) = {min(ga, gb)!r}")
            floor = max(0.0, ga + gb - 1)
            if not p.ccon >= floor - tol:
                out.append(f"{tag}: ccon = {p.ccon!r} < max(0, acc_a + acc_b - 1) = {floor!r}")
            if not p.con >= floor - tol:
                out.append(f"{tag}: con = {p.con!r} < max(0, acc_a + acc_b - 1) = {floor!r}")

    if g:
        g_mean = math.fsum(g.values()) / len(g)
    elif report.metric is MetricKind.ACCURACY:
        g_mean = report.zeta_mean
    else:
        g_mean = None
    if g_mean is not None:
        if not report.ccon_mean <= g_mean + tol:
            out.append(f"ccon_mean = {report.ccon_mean!r} > mean accuracy = {g_mean!r}")
        if not report.con_mean >= 2 * g_mean - 1 - tol:
            out.append(f"con_mean = {report.con_mean!r} < 2 * mean accuracy - 1 = {2 * g_mean - 1!r}")
    return out
