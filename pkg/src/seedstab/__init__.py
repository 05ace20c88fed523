"""Measure how much a fine-tuned model's predictions depend on the random seed.

Given per-seed prediction files and gold outputs, compute the spread of a
standard metric across seeds (VAR) and the pairwise prediction agreement
between seeds (CON) and correct agreement (CCON).
"""

from seedstab.analysis import (
    CorrelationSummary,
    normalize_heatmap,
    size_correlations,
    validate_report,
)
from seedstab.ingest import EvaluationManifest, assemble, load_gold, load_manifest, load_run
from seedstab.metrics import (
    accuracy,
    evaluate_metric,
    exact_match,
    mae,
    mcc,
    mse,
    pearson,
    precision_recall_f1,
    spearman,
    token_f1,
)
from seedstab.model import (
    AlignedRunSet,
    MetricKind,
    Orientation,
    PairConsistency,
    PredictionRecord,
    Run,
    StabilityReport,
    normalize_text,
    validate_run_set,
)
from seedstab.report import RenderedReport, render_report
from seedstab.stability import (
    AgreementScorer,
    aggregate_stability,
    indicator_scorer,
    metric_scorer,
    pair_consistency,
    pair_correct_consistency,
    scorer_from_name,
    token_mean_scorer,
    var,
)

__version__ = "0.1.0"
