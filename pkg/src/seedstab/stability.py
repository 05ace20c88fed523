"""Seed-sensitivity statistics.

Macro level: the spread of a standard metric across seeds (:func:`var`).
Micro level: how often two seeds make the same prediction on the same example
(consistency, CON) and how often they make the same *correct* prediction
(correct-consistency, CCON), averaged over every unordered seed pair.

The per-example scoring function is an :class:`AgreementScorer`:

* ``indicator``      1 if the two outputs are equal (and equal the gold output
                     for the correct variant), else 0.
* ``token_mean``     the indicator averaged over token positions, for
                     sequence labeling.
* ``metric_based``   a pairwise metric ``m``: ``m(a, b)`` for agreement and
                     ``(m(a, r) + m(b, r)) / 2`` for the correct variant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Callable, Sequence

import numpy as np

from seedstab.errors import (
    DuplicateId,
    EmptyInput,
    MetricError,
    MisalignedRuns,
    MissingGold,
    NeedAtLeastTwoRuns,
    TokenLengthMismatch,
    UnimplementedExtension,
    UnsupportedKindForVariant,
)
from seedstab.metrics import evaluate_metric, exact_match, token_f1
from seedstab.model import (
    METRICS_FOR_KIND,
    TEXT_KINDS,
    AlignedRunSet,
    MetricKind,
    PairConsistency,
    Run,
    StabilityReport,
    validate_run_set,
)

SCALES = ("fraction", "percent")

# Names reserved for scorers that are recognised but not shipped.
EXTENSION_SLOTS = frozenset({"bleu", "rouge", "bertscore", "uas", "las", "ndcg", "mrr", "map"})


def var(values: Sequence[float], scale: str = "fraction") -> float:
    """Population standard deviation of ``values`` (sqrt of mean squared deviation).

    ``values`` are in their natural unit (fractions for accuracy-like metrics).
    With ``scale="percent"`` the result is multiplied by 100, so
    ``var(v, "percent") == 100 * var(v, "fraction")`` holds bit for bit.
    """
    if scale not in SCALES:
        raise ValueError(f"scale must be one of {SCALES}, got {scale!r}")
    vals = [float(v) for v in values]
    if not vals:
        raise EmptyInput("var needs at least one value")
    if all(v == vals[0] for v in vals):
        sd = 0.0
    else:
        s = len(vals)
        mean = math.fsum(vals) / s
        sd = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / s)
    return sd * 100.0 if scale == "percent" else sd


@dataclass(frozen=True)
class AgreementScorer:
    kind: str
    pair_score: Callable[[Any, Any], float]
    correct_score: Callable[[Any, Any, Any], float]
    metric: MetricKind | None = None

    @property
    def name(self) -> str:
        return self.metric.value if self.metric is not None else self.kind

    @property
    def percent_scaled(self) -> bool:
        return self.metric.percent_scaled if self.metric is not None else True

    def supports(self, task_kind: str) -> bool:
        if self.kind == "indicator":
            return True
        if self.kind == "token_mean":
            return task_kind == "sequence_labeling"
        if self.metric in (MetricKind.MAE, MetricKind.MSE):
            return task_kind == "regression"
        return task_kind in TEXT_KINDS


def _indicator_pair(a: Any, b: Any) -> float:
    return 1.0 if a == b else 0.0


def _indicator_correct(a: Any, b: Any, r: Any) -> float:
    return 1.0 if a == b == r else 0.0


def indicator_scorer() -> AgreementScorer:
    return AgreementScorer("indicator", _indicator_pair, _indicator_correct)


def _token_pair(a: Sequence, b: Sequence) -> float:
    if len(a) != len(b):
        raise TokenLengthMismatch(f"token sequences of length {len(a)} and {len(b)}")
    if not a:
        raise TokenLengthMismatch("token sequences must be non-empty")
    return sum(1 for x, y in zip(a, b) if x == y) / len(a)


def _token_correct(a: Sequence, b: Sequence, r: Sequence) -> float:
    if not len(a) == len(b) == len(r):
        raise TokenLengthMismatch(
            f"token sequences of length {len(a)}, {len(b)} and {len(r)}"
        )
    if not a:
        raise TokenLengthMismatch("token sequences must be non-empty")
    return sum(1 for x, y, z in zip(a, b, r) if x == y == z) / len(a)


def token_mean_scorer() -> AgreementScorer:
    return AgreementScorer("token_mean", _token_pair, _token_correct)


def _abs_err(a: float, b: float) -> float:
    return abs(float(a) - float(b))


def _sq_err(a: float, b: float) -> float:
    d = float(a) - float(b)
    return d * d


_PAIRWISE_KERNELS: dict[MetricKind, Callable[[Any, Any], float]] = {
    MetricKind.MAE: _abs_err,
    MetricKind.MSE: _sq_err,
    MetricKind.EXACT_MATCH: exact_match,
    MetricKind.TOKEN_F1: token_f1,
}


def metric_scorer(kind: MetricKind | str) -> AgreementScorer:
    """Scorer built from a per-example metric.

    Only metrics defined on a single pair of outputs qualify; corpus-level
    metrics such as Pearson raise :class:`UnsupportedKindForVariant`.
    """
    kind = MetricKind(kind)
    if kind not in _PAIRWISE_KERNELS:
        raise UnsupportedKindForVariant(
            f"{kind.value} is not defined on a single pair of outputs"
        )
    kernel = _PAIRWISE_KERNELS[kind]

    def correct(a: Any, b: Any, r: Any) -> float:
        return (kernel(a, r) + kernel(b, r)) / 2

    return AgreementScorer("metric_based", kernel, correct, metric=kind)


def scorer_from_name(name: str) -> AgreementScorer:
    """Look up a scorer by its manifest name."""
    if name == "indicator":
        return indicator_scorer()
    if name == "token_mean":
        return token_mean_scorer()
    if name in EXTENSION_SLOTS:
        raise UnimplementedExtension(f"scorer {name!r} is a reserved extension with no implementation")
    try:
        kind = MetricKind(name)
    except ValueError:
        raise MetricError(f"unknown scorer {name!r}") from None
    return metric_scorer(kind)


# -- pairwise consistency over runs ----------------------------------------


def _run_map(run: Run) -> dict[str, Any]:
    d = run.as_dict()
    if len(d) != len(run.records):
        seen: set[str] = set()
        for rec in run.records:
            if rec.example_id in seen:
                raise DuplicateId(rec.example_id, f"run seed {run.seed}")
            seen.add(rec.example_id)
    return d


def _joined(run_a: Run, run_b: Run) -> tuple[list[str], dict, dict]:
    da, db = _run_map(run_a), _run_map(run_b)
    if da.keys() != db.keys():
        diff = sorted(da.keys() ^ db.keys())
        raise MisalignedRuns(
            f"runs {run_a.seed} and {run_b.seed} differ on {len(diff)} id(s), e.g. {diff[0]!r}"
        )
    if not da:
        raise MisalignedRuns("runs have no examples")
    return sorted(da), da, db


def pair_consistency(run_a: Run, run_b: Run, scorer: AgreementScorer) -> float:
    """CON for one pair of runs: mean agreement score over shared example ids."""
    ids, da, db = _joined(run_a, run_b)
    return math.fsum(scorer.pair_score(da[i], db[i]) for i in ids) / len(ids)


def pair_correct_consistency(run_a: Run, run_b: Run, gold: dict[str, Any],
                             scorer: AgreementScorer) -> float:
    """CCON for one pair of runs: mean correct-agreement score against ``gold``."""
    ids, da, db = _joined(run_a, run_b)
    for i in ids:
        if i not in gold:
            raise MissingGold(i)
    return math.fsum(scorer.correct_score(da[i], db[i], gold[i]) for i in ids) / len(ids)


# -- batched engines used by aggregate_stability ---------------------------
#
# Each engine precomputes an encoding per run once, then answers sums over
# examples for any pair.  Results match the per-example scorer calls exactly.


class _IndicatorEngine:
    def __init__(self, preds: dict[int, list], gold: list):
        # codes only need to agree on equality, so any stable numbering works
        values = set(gold)
        for seq in preds.values():
            values.update(seq)
        vocab = {v: i for i, v in enumerate(values)}
        n = len(gold)

        def encode(seq: list) -> np.ndarray:
            return np.fromiter(map(vocab.__getitem__, seq), dtype=np.int64, count=n)

        self.n = n
        self.gold = encode(gold)
        self.codes = {seed: encode(seq) for seed, seq in preds.items()}

    def gold_agreement(self, seed: int) -> float:
        return np.count_nonzero(self.codes[seed] == self.gold) / self.n

    def con_ccon(self, a: int, b: int) -> tuple[float, float]:
        same = self.codes[a] == self.codes[b]
        both_right = same & (self.codes[a] == self.gold)
        return np.count_nonzero(same) / self.n, np.count_nonzero(both_right) / self.n


class _TokenMeanEngine:
    def __init__(self, preds: dict[int, list], gold: list):
        lengths = np.fromiter((len(g) for g in gold), dtype=np.int64, count=len(gold))
        for seed, seq in preds.items():
            for p, g in zip(seq, gold):
                if len(p) != len(g):
                    raise TokenLengthMismatch(
                        f"run seed {seed}: {len(p)} tokens where gold has {len(g)}"
                    )
        vocab: dict[Any, int] = {}

        def encode(seqs: list) -> np.ndarray:
            return np.fromiter((vocab.setdefault(t, len(vocab)) for s in seqs for t in s),
                               dtype=np.int64, count=int(lengths.sum()))

        self.n = len(gold)
        self.lengths = lengths
        self.offsets = np.concatenate(([0], np.cumsum(lengths)[:-1]))
        self.gold = encode(gold)
        self.codes = {seed: encode(seq) for seed, seq in preds.items()}

    def _mean_of_fractions(self, hits: np.ndarray) -> float:
        counts = np.add.reduceat(hits.astype(np.int64), self.offsets)
        return math.fsum((counts / self.lengths).tolist()) / self.n

    def gold_agreement(self, seed: int) -> float:
        return self._mean_of_fractions(self.codes[seed] == self.gold)

    def con_ccon(self, a: int, b: int) -> tuple[float, float]:
        same = self.codes[a] == self.codes[b]
        return (self._mean_of_fractions(same),
                self._mean_of_fractions(same & (self.codes[a] == self.gold)))


class _ScalarMetricEngine:
    def __init__(self, preds: dict[int, list], gold: list, squared: bool):
        self.n = len(gold)
        self.squared = squared
        self.gold = np.asarray(gold, dtype=np.float64)
        self.vals = {seed: np.asarray(seq, dtype=np.float64) for seed, seq in preds.items()}

    def _err(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        d = x - y
        return d * d if self.squared else np.abs(d)

    def gold_agreement(self, seed: int) -> float:
        return math.fsum(self._err(self.vals[seed], self.gold).tolist()) / self.n

    def con_ccon(self, a: int, b: int) -> tuple[float, float]:
        va, vb = self.vals[a], self.vals[b]
        con = math.fsum(self._err(va, vb).tolist()) / self.n
        correct = (self._err(va, self.gold) + self._err(vb, self.gold)) / 2
        return con, math.fsum(correct.tolist()) / self.n


class _GenericEngine:
    def __init__(self, preds: dict[int, list], gold: list, scorer: AgreementScorer):
        self.n = len(gold)
        self.preds = preds
        self.gold = gold
        self.scorer = scorer

    def gold_agreement(self, seed: int) -> float:
        f = self.scorer.pair_score
        return math.fsum(f(p, g) for p, g in zip(self.preds[seed], self.gold)) / self.n

    def con_ccon(self, a: int, b: int) -> tuple[float, float]:
        pa, pb, f, fc = self.preds[a], self.preds[b], self.scorer.pair_score, self.scorer.correct_score
        con = math.fsum(f(x, y) for x, y in zip(pa, pb)) / self.n
        ccon = math.fsum(fc(x, y, r) for x, y, r in zip(pa, pb, self.gold)) / self.n
        return con, ccon


def _engine(scorer: AgreementScorer, preds: dict[int, list], gold: list):
    if scorer.kind == "indicator":
        return _IndicatorEngine(preds, gold)
    if scorer.kind == "token_mean":
        return _TokenMeanEngine(preds, gold)
    if scorer.metric in (MetricKind.MAE, MetricKind.MSE):
        return _ScalarMetricEngine(preds, gold, squared=scorer.metric is MetricKind.MSE)
    return _GenericEngine(preds, gold, scorer)


def aggregate_stability(run_set: AlignedRunSet, metric: MetricKind | str,
                        scorer: AgreementScorer) -> StabilityReport:
    """Compute zeta per seed, VAR, and CON/CCON over all S(S-1)/2 seed pairs.

    Pairs are enumerated with ``seed_a < seed_b`` in ascending order.  VAR is
    reported in percent for fraction-valued metrics and in raw units for
    error metrics (MAE, MSE); the same applies to the spread of pair values.
    """
    validate_run_set(run_set)
    if run_set.n_seeds < 2:
        raise NeedAtLeastTwoRuns(f"stability needs at least 2 runs, got {run_set.n_seeds}")
    metric = MetricKind(metric)
    if metric not in METRICS_FOR_KIND[run_set.task_kind]:
        raise UnsupportedKindForVariant(
            f"metric {metric.value} does not apply to {run_set.task_kind} outputs"
        )
    if not scorer.supports(run_set.task_kind):
        raise UnsupportedKindForVariant(
            f"scorer {scorer.name} does not apply to {run_set.task_kind} outputs"
        )

    ids = run_set.sorted_ids()
    preds: dict[int, list] = {}
    if list(run_set.gold) == ids and run_set._aligned_outputs is not None:
        gold = list(run_set.gold.values())
        for seed in sorted(run_set._aligned_outputs):
            preds[seed] = run_set._aligned_outputs[seed]
    else:
        gold = [run_set.gold[i] for i in ids]
        for run in run_set.sorted_runs():
            d = run.as_dict()
            preds[run.seed] = [d[i] for i in ids]
    seeds = list(preds)

    zeta = {seed: evaluate_metric(metric, preds[seed], gold) for seed in seeds}
    zeta_values = list(zeta.values())
    metric_scale = "percent" if metric.percent_scaled else "fraction"

    engine = _engine(scorer, preds, gold)
    gold_agreement = {seed: engine.gold_agreement(seed) for seed in seeds}
    pairs = []
    for a, b in combinations(seeds, 2):
        con, ccon = engine.con_ccon(a, b)
        pairs.append(PairConsistency(a, b, float(con), float(ccon)))
    cons = [p.con for p in pairs]
    ccons = [p.ccon for p in pairs]
    pair_scale = "percent" if scorer.percent_scaled else "fraction"

    return StabilityReport(
        task=run_set.task,
        metric=metric,
        scorer=scorer.name,
        n_seeds=len(seeds),
        n_examples=len(ids),
        train_size=run_set.train_size,
        zeta_per_seed=zeta,
        zeta_mean=math.fsum(zeta_values) / len(zeta_values),
        var=var(zeta_values, metric_scale),
        var_scale="percent" if metric.percent_scaled else "raw",
        gold_agreement={s: float(v) for s, v in gold_agreement.items()},
        pairs=tuple(pairs),
        con_mean=math.fsum(cons) / len(cons),
        ccon_mean=math.fsum(ccons) / len(ccons),
        con_var=var(cons, pair_scale),
        ccon_var=var(ccons, pair_scale),
    )
