"""Standard evaluation metrics.

All kernels take plain sequences and return a Python float.  Sums go through
``math.fsum`` so results do not depend on element order.

Degenerate cases follow common evaluation-harness conventions rather than
raising: 0/0 precision or recall is 0, F1 with P = R = 0 is 0, and MCC with a
zero denominator is 0.  Pearson and Spearman raise :class:`ZeroVariance`
instead, since a correlation with a constant series has no meaningful value.
"""

from __future__ import annotations

import math
import operator
from collections import Counter
from dataclasses import dataclass
from typing import Any, Hashable, Sequence

import numpy as np

from seedstab.errors import (
    EmptyInput,
    LengthMismatch,
    MetricError,
    NonBinaryLabels,
    UnsupportedKindForVariant,
    VariantMismatch,
    ZeroVariance,
)
from seedstab.model import MetricKind, normalize_text


@dataclass(frozen=True)
class ConfusionCounts:
    """One-vs-rest counts for a single class."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _check_lengths(preds: Sequence, gold: Sequence, minimum: int = 1) -> int:
    if len(preds) != len(gold):
        raise LengthMismatch(f"got {len(preds)} predictions for {len(gold)} references")
    if len(preds) < minimum:
        raise EmptyInput(f"need at least {minimum} item(s), got {len(preds)}")
    return len(preds)


def _family(tp: type) -> str:
    if issubclass(tp, (tuple, list)):
        return "sequence"
    if issubclass(tp, str):
        return "string"
    if issubclass(tp, (int, float, np.integer, np.floating)):
        return "number"
    return tp.__name__


def _label_key(label: Hashable) -> tuple[str, Any]:
    # total order over mixed str/int label universes
    return (type(label).__name__, label)


def _is_label(x: Any) -> bool:
    return isinstance(x, (str, int, np.integer)) and not isinstance(x, bool)


def _is_number(x: Any) -> bool:
    return isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool)


def _is_text(x: Any) -> bool:
    return isinstance(x, str) or (
        isinstance(x, (tuple, list)) and all(isinstance(t, str) for t in x)
    )


def accuracy(preds: Sequence, gold: Sequence) -> float:
    """Fraction of positions where the prediction equals the reference exactly."""
    n = _check_lengths(preds, gold)
    families = set(map(_family, set(map(type, preds)) | set(map(type, gold))))
    if len(families) > 1:
        raise VariantMismatch(f"cannot compare outputs of kinds {sorted(families)}")
    hits = sum(map(operator.eq, preds, gold))
    return hits / n


def confusion_counts(preds: Sequence, gold: Sequence,
                     labels: Sequence | None = None) -> dict[Any, ConfusionCounts]:
    n = _check_lengths(preds, gold)
    pairs = Counter(zip(preds, gold))
    if labels is None:
        labels = sorted(set(preds) | set(gold), key=_label_key)
    out = {}
    for c in labels:
        tp = pairs.get((c, c), 0)
        fp = sum(k for (p, g), k in pairs.items() if p == c and g != c)
        fn = sum(k for (p, g), k in pairs.items() if g == c and p != c)
        out[c] = ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=n - tp - fp - fn)
    return out


def _prf(cc: ConfusionCounts) -> tuple[float, float, float]:
    p = cc.tp / (cc.tp + cc.fp) if cc.tp + cc.fp else 0.0
    r = cc.tp / (cc.tp + cc.fn) if cc.tp + cc.fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def precision_recall_f1(
    preds: Sequence,
    gold: Sequence,
    averaging: str = "macro",
    positive: Hashable | None = None,
    labels: Sequence | None = None,
) -> tuple[float, float, float]:
    """Precision, recall and F1 for class-label outputs.

    Args:
        averaging: ``"binary"`` scores only ``positive``; ``"macro"`` takes the
            unweighted mean of per-class P, R and F1 over ``labels`` (default:
            every label seen in ``preds`` or ``gold``).
        positive: the positive class for binary averaging.
        labels: restrict macro averaging to these classes.
    """
    _check_lengths(preds, gold)
    universe = set(preds) | set(gold)
    if averaging == "binary":
        if positive is None or positive not in universe:
            raise MetricError(f"positive class {positive!r} is not in the label universe")
        return _prf(confusion_counts(preds, gold, [positive])[positive])
    if averaging != "macro":
        raise MetricError(f"unknown averaging {averaging!r}")
    per_class = [_prf(cc) for cc in confusion_counts(preds, gold, labels).values()]
    if not per_class:
        raise EmptyInput("no classes to average over")
    k = len(per_class)
    return (
        math.fsum(p for p, _, _ in per_class) / k,
        math.fsum(r for _, r, _ in per_class) / k,
        math.fsum(f for _, _, f in per_class) / k,
    )


def mcc(preds: Sequence, gold: Sequence) -> float:
    """Matthews correlation coefficient for binary labels; 0 when undefined."""
    _check_lengths(preds, gold)
    universe = sorted(set(preds) | set(gold), key=_label_key)
    if len(universe) > 2:
        raise NonBinaryLabels(f"mcc needs at most two labels, got {len(universe)}")
    if len(universe) < 2:
        return 0.0
    cc = confusion_counts(preds, gold, [universe[1]])[universe[1]]
    tp, fp, fn, tn = cc.tp, cc.fp, cc.fn, cc.tn
    num = tp * tn - fp * fn
    prod = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if prod == 0:
        return 0.0
    root = math.isqrt(prod)
    denom = root if root * root == prod else math.sqrt(prod)
    return max(-1.0, min(1.0, num / denom))


def _as_float_array(values: Sequence) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise MetricError("expected a flat sequence of scalars")
    if not np.all(np.isfinite(arr)):
        raise MetricError("scalars must be finite")
    return arr


def mae(preds: Sequence[float], gold: Sequence[float]) -> float:
    n = _check_lengths(preds, gold)
    diff = _as_float_array(preds) - _as_float_array(gold)
    return math.fsum(np.abs(diff).tolist()) / n


def mse(preds: Sequence[float], gold: Sequence[float]) -> float:
    n = _check_lengths(preds, gold)
    diff = _as_float_array(preds) - _as_float_array(gold)
    return math.fsum((diff * diff).tolist()) / n


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation.

    Raises:
        ZeroVariance: if either series is constant.
    """
    n = _check_lengths(xs, ys, minimum=2)
    x = _as_float_array(xs)
    y = _as_float_array(ys)
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ZeroVariance("pearson correlation is undefined for a constant series")
    dx = x - math.fsum(x.tolist()) / n
    dy = y - math.fsum(y.tolist()) / n
    sxy = math.fsum((dx * dy).tolist())
    sxx = math.fsum((dx * dx).tolist())
    syy = math.fsum((dy * dy).tolist())
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("pearson correlation is undefined for a constant series")
    prod = sxx * syy
    # one rounding instead of two, so exactly linear data gives exactly +-1
    denom = math.sqrt(prod) if 0.0 < prod < math.inf else math.sqrt(sxx) * math.sqrt(syy)
    r = sxy / denom
    return max(-1.0, min(1.0, r))


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they span."""
    x = _as_float_array(values)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x), dtype=np.float64)
    sorted_x = x[order]
    start = 0
    while start < len(x):
        stop = start + 1
        while stop < len(x) and sorted_x[stop] == sorted_x[start]:
            stop += 1
        ranks[order[start:stop]] = (start + 1 + stop) / 2.0
        start = stop
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    _check_lengths(xs, ys, minimum=2)
    return pearson(average_ranks(xs), average_ranks(ys))


def _tokens(text: str | Sequence[str]) -> tuple[str, ...]:
    if isinstance(text, str):
        return normalize_text(text)
    return tuple(text)


def exact_match(a: str | Sequence[str], b: str | Sequence[str]) -> float:
    return 1.0 if _tokens(a) == _tokens(b) else 0.0


def token_f1(a: str | Sequence[str], b: str | Sequence[str]) -> float:
    """Token-overlap F1 using multiset intersection of normalized tokens."""
    ta, tb = _tokens(a), _tokens(b)
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    common = sum((Counter(ta) & Counter(tb)).values())
    if common == 0:
        return 0.0
    p = common / len(ta)
    r = common / len(tb)
    return 2 * p * r / (p + r)


_LABEL_METRICS = {MetricKind.PRECISION, MetricKind.RECALL, MetricKind.F1, MetricKind.MCC}
_SCALAR_METRICS = {MetricKind.MAE, MetricKind.MSE, MetricKind.PEARSON, MetricKind.SPEARMAN}
_TEXT_METRICS = {MetricKind.EXACT_MATCH, MetricKind.TOKEN_F1}


def check_kind_for_values(kind: MetricKind, values: Sequence) -> None:
    types = set(map(type, values))
    if kind in _LABEL_METRICS:
        ok = types <= {str, int} or all(map(_is_label, values))
        what = "class labels"
    elif kind in _SCALAR_METRICS:
        ok = types <= {int, float} or all(map(_is_number, values))
        what = "scalars"
    elif kind in _TEXT_METRICS:
        ok = (types <= {str}
              or (types <= {tuple, list} and all(set(map(type, v)) <= {str} for v in values))
              or all(map(_is_text, values)))
        what = "text"
    else:
        return
    if not ok:
        raise UnsupportedKindForVariant(f"metric {kind.value} needs {what}")


def evaluate_metric(kind: MetricKind | str, preds: Sequence, gold: Sequence) -> float:
    """Compute metric ``kind`` of ``preds`` against ``gold`` in its natural unit.

    Precision, recall and F1 are macro-averaged over the label universe.
    Exact match and token F1 are averaged over examples.
    """
    kind = MetricKind(kind)
    _check_lengths(preds, gold)
    check_kind_for_values(kind, gold)
    check_kind_for_values(kind, preds)
    if kind is MetricKind.ACCURACY:
        return accuracy(preds, gold)
    if kind in (MetricKind.PRECISION, MetricKind.RECALL, MetricKind.F1):
        p, r, f = precision_recall_f1(preds, gold, averaging="macro")
        return {MetricKind.PRECISION: p, MetricKind.RECALL: r, MetricKind.F1: f}[kind]
    if kind is MetricKind.MCC:
        return mcc(preds, gold)
    if kind is MetricKind.MAE:
        return mae(preds, gold)
    if kind is MetricKind.MSE:
        return mse(preds, gold)
    if kind is MetricKind.PEARSON:
        return pearson(preds, gold)
    if kind is MetricKind.SPEARMAN:
        return spearman(preds, gold)
    kernel = exact_match if kind is MetricKind.EXACT_MATCH else token_f1
    return math.fsum(kernel(p, g) for p, g in zip(preds, gold)) / len(gold)
