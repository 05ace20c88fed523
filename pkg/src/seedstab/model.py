"""Domain types shared across the package.

Outputs are plain Python values; which variant is legal is decided by the
task kind of the enclosing :class:`AlignedRunSet`:

=================  ==========================================================
task kind          output
=================  ==========================================================
classification     class label, ``str`` or ``int``
regression         finite real number
sequence_labeling  non-empty tuple of ``str`` labels, one per token
text_generation    tuple of ``str`` tokens (see :func:`normalize_text`)
qa                 tuple of ``str`` tokens (see :func:`normalize_text`)
=================  ==========================================================

Metric values (zeta, consistency) are held as fractions or raw metric units;
conversion to percent happens only when rendering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from operator import itemgetter
from typing import Any, Mapping, NamedTuple, Union

from seedstab.errors import (
    DuplicateId,
    DuplicateSeed,
    EmptyRunSet,
    ExtraId,
    MissingId,
    TaskMismatch,
    VariantMismatch,
)

Output = Union[str, int, float, tuple]

TASK_KINDS = ("classification", "regression", "sequence_labeling", "text_generation", "qa")
TEXT_KINDS = ("text_generation", "qa")


def normalize_text(text: str) -> tuple[str, ...]:
    """Lowercase and split on Unicode whitespace. No stemming, no punctuation stripping."""
    return tuple(text.lower().split())


class Orientation(str, Enum):
    HIGHER_BETTER = "higher_better"
    LOWER_BETTER = "lower_better"


class MetricKind(str, Enum):
    ACCURACY = "accuracy"
    PRECISION = "precision"
    RECALL = "recall"
    F1 = "f1"
    MCC = "mcc"
    MAE = "mae"
    MSE = "mse"
    PEARSON = "pearson"
    SPEARMAN = "spearman"
    EXACT_MATCH = "exact_match"
    TOKEN_F1 = "token_f1"

    @property
    def orientation(self) -> Orientation:
        if self in (MetricKind.MAE, MetricKind.MSE):
            return Orientation.LOWER_BETTER
        return Orientation.HIGHER_BETTER

    @property
    def percent_scaled(self) -> bool:
        # error metrics live in the target's units; everything else is a
        # fraction or a correlation and is shown as a percentage
        return self not in (MetricKind.MAE, MetricKind.MSE)


# Which standard metrics make sense for which task kind.
METRICS_FOR_KIND: dict[str, frozenset[MetricKind]] = {
    "classification": frozenset({
        MetricKind.ACCURACY, MetricKind.PRECISION, MetricKind.RECALL,
        MetricKind.F1, MetricKind.MCC,
    }),
    "regression": frozenset({
        MetricKind.MAE, MetricKind.MSE, MetricKind.PEARSON, MetricKind.SPEARMAN,
    }),
    "sequence_labeling": frozenset({MetricKind.ACCURACY}),
    "text_generation": frozenset({
        MetricKind.ACCURACY, MetricKind.EXACT_MATCH, MetricKind.TOKEN_F1,
    }),
    "qa": frozenset({MetricKind.ACCURACY, MetricKind.EXACT_MATCH, MetricKind.TOKEN_F1}),
}


class PredictionRecord(NamedTuple):
    example_id: str
    output: Any


@dataclass(frozen=True)
class Run:
    """Predictions of one fine-tuned model (one seed) on one task."""

    seed: int
    task: str
    records: tuple[PredictionRecord, ...]

    def __post_init__(self):
        if not isinstance(self.records, tuple):
            object.__setattr__(self, "records", tuple(self.records))

    def as_dict(self) -> dict[str, Any]:
        return {r.example_id: r.output for r in self.records}


@dataclass(frozen=True)
class AlignedRunSet:
    task_kind: str
    runs: tuple[Run, ...]
    gold: Mapping[str, Any]
    train_size: int | None = None
    # set by validate_run_set; the set is never mutated afterwards
    _validated: bool = field(default=False, init=False, repr=False, compare=False)
    # outputs per seed in gold-key order, kept by validate_run_set when every
    # run already lists its records in that order
    _aligned_outputs: Mapping[int, list] | None = field(
        default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.runs, tuple):
            object.__setattr__(self, "runs", tuple(self.runs))
        if not isinstance(self.gold, MappingProxyType):
            object.__setattr__(self, "gold", MappingProxyType(dict(self.gold)))

    @property
    def n_examples(self) -> int:
        return len(self.gold)

    @property
    def n_seeds(self) -> int:
        return len(self.runs)

    @property
    def task(self) -> str:
        return self.runs[0].task if self.runs else ""

    @property
    def seeds(self) -> list[int]:
        return sorted(r.seed for r in self.runs)

    def sorted_ids(self) -> list[str]:
        return sorted(self.gold)

    def sorted_runs(self) -> list[Run]:
        return sorted(self.runs, key=lambda r: r.seed)


@dataclass(frozen=True)
class PairConsistency:
    seed_a: int
    seed_b: int
    con: float
    ccon: float


@dataclass(frozen=True)
class StabilityReport:
    """Macro and micro seed-sensitivity summary for one task.

    ``zeta_per_seed``, ``zeta_mean``, the pair values and their means are in
    the metric's natural unit (fractions for accuracy-like metrics).  ``var``,
    ``con_var`` and ``ccon_var`` are population standard deviations expressed
    in ``var_scale`` ("percent" or "raw").

    ``gold_agreement`` is the per-seed mean of the scorer's pair score between
    the run and the gold outputs; for the indicator scorer it is the accuracy.

    A report transcribed from a publication may carry only aggregates, in
    which case the per-seed and per-pair collections are empty.
    """

    task: str
    metric: MetricKind
    scorer: str
    n_seeds: int
    zeta_mean: float
    var: float
    con_mean: float
    ccon_mean: float
    var_scale: str = "percent"
    n_examples: int | None = None
    train_size: int | None = None
    zeta_per_seed: Mapping[int, float] = field(default_factory=dict)
    gold_agreement: Mapping[int, float] = field(default_factory=dict)
    pairs: tuple[PairConsistency, ...] = ()
    con_var: float | None = None
    ccon_var: float | None = None

    @property
    def orientation(self) -> Orientation:
        return self.metric.orientation

    @property
    def seeds(self) -> list[int]:
        return sorted(self.zeta_per_seed)

    @property
    def is_summary_only(self) -> bool:
        return not self.zeta_per_seed and not self.pairs


def _check_output(value: Any, task_kind: str, where: str) -> None:
    if task_kind == "classification":
        ok = isinstance(value, (str, int)) and not isinstance(value, bool)
        expected = "a class label (string or integer)"
    elif task_kind == "regression":
        try:
            ok = (isinstance(value, (int, float)) and not isinstance(value, bool)
                  and math.isfinite(value))
        except OverflowError:
            ok = False
        expected = "a finite real number"
    elif task_kind == "sequence_labeling":
        ok = (isinstance(value, tuple) and len(value) > 0
              and all(isinstance(t, str) for t in value))
        expected = "a non-empty token label sequence"
    elif task_kind in TEXT_KINDS:
        ok = isinstance(value, tuple) and all(isinstance(t, str) for t in value)
        expected = "a normalized token list"
    else:
        raise VariantMismatch(f"unknown task kind {task_kind!r}")
    if not ok:
        raise VariantMismatch(
            f"{where}: {task_kind} requires {expected}, got {type(value).__name__} {value!r}"
        )


def _outputs_ok(values: list, task_kind: str) -> bool:
    # fast whole-list check; exact types only, so anything unusual (bool,
    # subclasses, numpy scalars) falls through to the per-value diagnosis
    types = set(map(type, values))
    if task_kind == "classification":
        return types <= {str, int}
    if task_kind == "regression":
        try:
            return types <= {int, float} and all(map(math.isfinite, values))
        except OverflowError:
            return False
    if task_kind == "sequence_labeling":
        return types <= {tuple} and all(v and set(map(type, v)) <= {str} for v in values)
    return types <= {tuple} and all(set(map(type, v)) <= {str} for v in values)


def _check_ids(ids: list, gold: Mapping[str, Any], seed: int) -> None:
    id_set = set(ids)
    if len(id_set) != len(ids):
        seen: set[str] = set()
        for eid in ids:
            if eid in seen:
                raise DuplicateId(eid, f"run seed {seed}")
            seen.add(eid)
    if id_set != gold.keys():
        extra = id_set - gold.keys()
        if extra:
            raise ExtraId(min(extra, key=str), seed)
        raise MissingId(min(gold.keys() - id_set), seed)


def validate_run_set(candidate: AlignedRunSet) -> AlignedRunSet:
    """Check every structural invariant of ``candidate`` and return it unchanged.

    Raises:
        EmptyRunSet: no runs or no gold examples.
        DuplicateSeed, DuplicateId, MissingId, ExtraId: alignment problems.
        VariantMismatch: an output is not of the variant the task kind demands.
        TaskMismatch: runs disagree on the task name.
    """
    if candidate._validated:
        return candidate
    kind = candidate.task_kind
    if kind not in TASK_KINDS:
        raise VariantMismatch(f"unknown task kind {kind!r}")
    if not candidate.runs:
        raise EmptyRunSet("run set has no runs")
    if not candidate.gold:
        raise EmptyRunSet("run set has no gold examples")

    gold = candidate.gold
    if not set(map(type, gold)) <= {str} or "" in gold:
        bad = next(k for k in gold if not isinstance(k, str) or not k)
        raise VariantMismatch(f"gold ids must be non-empty strings, got {bad!r}")
    if not _outputs_ok(list(gold.values()), kind):
        for example_id, value in gold.items():
            _check_output(value, kind, f"gold id {example_id!r}")

    task = candidate.runs[0].task
    gold_ids = list(gold)
    aligned: dict[int, list] | None = {}
    seen_seeds: set[int] = set()
    for run in candidate.runs:
        if run.seed in seen_seeds:
            raise DuplicateSeed(run.seed)
        seen_seeds.add(run.seed)
        if run.task != task:
            raise TaskMismatch(f"run seed {run.seed} is for task {run.task!r}, expected {task!r}")
        ids = list(map(itemgetter(0), run.records))
        # same order as gold (the common case after assembly) settles
        # coverage and uniqueness in one comparison
        if ids != gold_ids:
            _check_ids(ids, gold, run.seed)
            aligned = None
        outputs = list(map(itemgetter(1), run.records))
        if not _outputs_ok(outputs, kind):
            for eid, value in zip(ids, outputs):
                _check_output(value, kind, f"run seed {run.seed}, id {eid!r}")
        if aligned is not None:
            aligned[run.seed] = outputs
    object.__setattr__(candidate, "_aligned_outputs", aligned)
    object.__setattr__(candidate, "_validated", True)
    return candidate
