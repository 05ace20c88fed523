"""Acceptance criteria, one section per criterion.

The terminal summary prints one PASS/FAIL line per criterion (see conftest).
"""

import json
import math
import shutil
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (
    FIXTURES,
    PAPER_SEEDS,
    brute_force,
    fig1_outputs,
    make_run,
    make_run_set,
    random_instance,
)
from seedstab import metrics
from seedstab.analysis import size_correlations, validate_report
from seedstab.cli import main
from seedstab.data import fixture_path
from seedstab.model import MetricKind
from seedstab.report import load_reports
from seedstab.stability import (
    aggregate_stability,
    indicator_scorer,
    pair_consistency,
    pair_correct_consistency,
    var,
)

TOL = 1e-12
N_RANDOM = 1000


def _random_instances():
    rng = np.random.default_rng(20240601)
    return [random_instance(rng) for _ in range(N_RANDOM)]


@pytest.fixture(scope="module")
def instances():
    return _random_instances()


@pytest.fixture(scope="module")
def reports(instances):
    return [aggregate_stability(make_run_set(p, g), "accuracy", indicator_scorer())
            for p, g in instances]


# -- 1 ---------------------------------------------------------------------


@pytest.mark.acceptance(1)
def test_c1_matches_brute_force_oracle(instances, reports, note):
    worst = 0.0
    for (preds, gold), rep in zip(instances, reports):
        ref = brute_force(preds, gold)
        seeds = sorted(preds)
        assert rep.seeds == seeds
        assert len(rep.pairs) == len(seeds) * (len(seeds) - 1) // 2
        diffs = [abs(rep.zeta_per_seed[s] - ref["acc"][s]) for s in seeds]
        diffs += [abs(rep.zeta_mean - ref["zeta_mean"]), abs(rep.var - ref["var"]),
                  abs(rep.con_mean - ref["con_mean"]), abs(rep.ccon_mean - ref["ccon_mean"])]
        for p in rep.pairs:
            assert p.seed_a < p.seed_b
            # the oracle scores both orders independently
            diffs += [abs(p.con - ref["con"][p.seed_a, p.seed_b]),
                      abs(p.con - ref["con"][p.seed_b, p.seed_a]),
                      abs(p.ccon - ref["ccon"][p.seed_a, p.seed_b]),
                      abs(p.ccon - ref["ccon"][p.seed_b, p.seed_a])]
        worst = max(worst, max(diffs))
    assert worst <= TOL
    note(f"{len(instances)} seeded instances (N<=200, S<=6), max abs deviation {worst:.2e}")


@st.composite
def classification_instances(draw):
    n = draw(st.integers(1, 200))
    s = draw(st.integers(2, 6))
    k = draw(st.integers(2, 5))
    labels = st.integers(0, k - 1)
    gold = draw(st.lists(labels, min_size=n, max_size=n))
    seeds = draw(st.lists(st.integers(0, 10_000), min_size=s, max_size=s, unique=True))
    preds = {seed: draw(st.lists(labels, min_size=n, max_size=n)) for seed in seeds}
    return preds, gold


@pytest.mark.acceptance(1)
@settings(max_examples=1000, deadline=None)
@given(classification_instances())
def test_c1_matches_brute_force_oracle_hypothesis(instance):
    preds, gold = instance
    rep = aggregate_stability(make_run_set(preds, gold), "accuracy", indicator_scorer())
    ref = brute_force(preds, gold)
    assert abs(rep.zeta_mean - ref["zeta_mean"]) <= TOL
    assert abs(rep.var - ref["var"]) <= TOL
    assert abs(rep.con_mean - ref["con_mean"]) <= TOL
    assert abs(rep.ccon_mean - ref["ccon_mean"]) <= TOL
    for p in rep.pairs:
        assert abs(p.con - ref["con"][p.seed_b, p.seed_a]) <= TOL
        assert abs(p.ccon - ref["ccon"][p.seed_a, p.seed_b]) <= TOL


# -- 2 ---------------------------------------------------------------------


@pytest.mark.acceptance(2)
def test_c2_sandwich_on_random_instances(reports, note):
    violations = 0
    for rep in reports:
        acc = rep.zeta_per_seed
        for p in rep.pairs:
            a, b = acc[p.seed_a], acc[p.seed_b]
            if not max(0.0, a + b - 1) - TOL <= p.ccon <= min(p.con, a, b) + TOL:
                violations += 1
            if not p.con <= 1 + TOL:
                violations += 1
        if not rep.ccon_mean <= rep.zeta_mean + TOL:
            violations += 1
        if validate_report(rep):
            violations += 1
    assert violations == 0
    note(f"{len(reports)} instances, {violations} violations")


@pytest.mark.acceptance(2)
def test_c2_table2_accuracy_cells_validate(capsys, note):
    path = fixture_path("table2_accuracy_cells")
    assert len(load_reports(path)) == 22
    code = main(["validate", str(path)])
    out = capsys.readouterr().out
    assert code == 0
    assert out.strip() == "OK"
    note("validate on the 22 accuracy cells: OK")


# -- 3 ---------------------------------------------------------------------


@pytest.mark.acceptance(3)
def test_c3_two_model_illustration(tmp_path, capsys, note):
    start = time.perf_counter()
    run_a, run_b, gold = fig1_outputs()
    rs = make_run_set({42: run_a, 52: run_b}, gold)
    rep = aggregate_stability(rs, "accuracy", indicator_scorer())
    assert f"{100 * rep.zeta_per_seed[42]:.2f}" == "60.00"
    assert f"{100 * rep.zeta_per_seed[52]:.2f}" == "60.00"
    assert rep.zeta_per_seed == {42: 0.6, 52: 0.6}
    assert rep.con_mean == 0.2 and rep.ccon_mean == 0.2
    assert rep.var == 0.0

    a, b = make_run(42, run_a), make_run(52, run_b)
    gold_map = dict(zip([r.example_id for r in a.records], gold))
    assert pair_consistency(a, b, indicator_scorer()) == 0.2
    assert pair_correct_consistency(a, b, gold_map, indicator_scorer()) == 0.2

    code = main(["eval", "--manifest", str(FIXTURES / "fig1" / "manifest.json"),
                 "--out", str(tmp_path / "fig1.md")])
    assert code == 0
    assert capsys.readouterr().out.strip() == "fig1 60.00 0.00 20.00 20.00"
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    note(f"acc 60.00 / 60.00, CON 20.00, CCON 20.00 in {elapsed:.3f} s")


# -- 4 ---------------------------------------------------------------------


@pytest.mark.acceptance(4)
def test_c4_scale_law_exact(note):
    rng = np.random.default_rng(7)
    for _ in range(100):
        s = int(rng.integers(1, 12))
        values = rng.random(s).tolist()
        assert var(values, "percent") == 100 * var(values, "fraction")
    note("100 random series: var(percent) == 100 * var(fraction) bit for bit")


@pytest.mark.acceptance(4)
def test_c4_constant_series_is_zero():
    rng = np.random.default_rng(8)
    for _ in range(100):
        v = float(rng.random())
        s = int(rng.integers(1, 12))
        assert var([v] * s, "fraction") == 0.0
        assert var([v] * s, "percent") == 0.0
    # values whose naive mean is not exactly representable
    assert var([0.1] * 10) == 0.0
    assert var([0.9, 0.9, 0.9], "percent") == 0.0


# -- 5 ---------------------------------------------------------------------

PAPER_R = {"r_var": -0.3918, "r_con": 0.4257, "r_ccon": 0.4259}
# independent recomputation (scipy.stats.pearsonr on the fixture values)
ORACLE_R = {
    "log10": {"r_var": -0.434225, "r_con": 0.475814, "r_ccon": 0.416192},
    "raw": {"r_var": -0.355792, "r_con": 0.384169, "r_ccon": 0.406142},
}
PINNED_TRANSFORM = "raw"


def _correlate(transform, capsys):
    code = main(["correlate", str(fixture_path("table2_roberta")),
                 "--sizes", str(fixture_path("train_sizes")), "--transform", transform])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == f"transform {transform}"
    return {k: float(v) for k, v in (line.split() for line in lines[1:])}


@pytest.mark.acceptance(5)
def test_c5_size_correlations(capsys, note):
    passing = None
    for transform in ("log10", "raw"):
        got = _correlate(transform, capsys)
        for key, value in got.items():
            assert abs(value - ORACLE_R[transform][key]) <= 5e-5
        misses = {k: round(abs(got[k] - PAPER_R[k]), 4) for k in PAPER_R
                  if abs(got[k] - PAPER_R[k]) > 0.05}
        shown = ", ".join(f"{k} {got[k]:+.4f}" for k in PAPER_R)
        if misses:
            note(f"{transform}: {shown}; outside +-0.05: {misses}")
            continue
        note(f"{transform}: {shown}; all within +-0.05")
        passing = transform
        break
    assert passing == PINNED_TRANSFORM
    note(f"transform={passing}")


@pytest.mark.acceptance(5)
def test_c5_pinned_regression_values():
    reps = load_reports(fixture_path("table2_roberta"))
    sizes = json.loads(Path(fixture_path("train_sizes")).read_text())
    summary = size_correlations(reps, sizes, PINNED_TRANSFORM)
    assert summary.r_var == pytest.approx(-0.355792, abs=5e-7)
    assert summary.r_con == pytest.approx(0.384169, abs=5e-7)
    assert summary.r_ccon == pytest.approx(0.406142, abs=5e-7)


# -- 6 ---------------------------------------------------------------------


@pytest.mark.acceptance(6)
def test_c6_kernel_examples():
    assert metrics.accuracy([1, 0, 1, 1], [1, 0, 1, 1]) == 1.0
    assert metrics.accuracy([1, 0, 1], [1, 1, 1]) == 2 / 3
    assert metrics.accuracy([0] * 5, [1] * 5) == 0.0
    assert metrics.precision_recall_f1([1, 0, 2], [1, 0, 2]) == (1.0, 1.0, 1.0)
    assert metrics.precision_recall_f1([1, 1, 0], [1, 0, 1], "binary", positive=1) == (0.5, 0.5, 0.5)
    assert metrics.precision_recall_f1([0, 0, 0], [1, 0, 1], "binary", positive=1)[0] == 0.0
    assert metrics.mcc([0, 1, 1, 0], [0, 1, 1, 0]) == 1.0
    assert metrics.mcc([1, 1, 0, 0], [1, 0, 1, 0]) == 0.0
    assert metrics.mcc([1, 1, 1, 1], [1, 0, 1, 0]) == 0.0
    assert metrics.mae([1.5, 2.0], [1.5, 2.0]) == 0.0
    assert metrics.mae([2, 4], [3, 3]) == 1.0 and metrics.mse([2, 4], [3, 3]) == 1.0
    assert metrics.mae([5], [2]) == 3.0 and metrics.mse([5], [2]) == 9.0
    assert metrics.pearson([1, 2, 3], [2, 4, 6]) == 1.0
    assert metrics.pearson([1, 2, 3], [-1, -2, -3]) == -1.0
    assert metrics.pearson([1, 2, 3], [1, 3, 2]) == 0.5
    assert metrics.spearman([1, 2, 3, 4], [1, 4, 9, 16]) == 1.0
    assert metrics.spearman([1, 2, 3], [3, 2, 1]) == -1.0
    assert metrics.spearman([1, 2, 3], [2, 1, 3]) == 0.5
    assert metrics.exact_match("a b c", "a b c") == 1 and metrics.token_f1("a b c", "a b c") == 1
    assert metrics.exact_match("a b", "b c") == 0 and metrics.token_f1("a b", "b c") == 0.5
    assert metrics.exact_match("", "x") == 0 and metrics.token_f1("", "x") == 0
    assert metrics.evaluate_metric("mcc", [1, 1, 0, 0], [1, 0, 1, 0]) == 0.0


def _near(a, b):
    return abs(a - b) <= TOL


@pytest.mark.acceptance(6)
def test_c6_kernel_properties_10k(note):
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    count = 10_000
    for _ in range(count):
        n = int(rng.integers(2, 30))
        p = rng.integers(0, 3, size=n).tolist()
        g = rng.integers(0, 3, size=n).tolist()
        acc = metrics.accuracy(p, g)
        assert 0.0 <= acc <= 1.0 and acc == metrics.accuracy(g, p)
        _, _, f1 = metrics.precision_recall_f1(p, g)
        assert 0.0 <= f1 <= 1.0

        pb, gb = [v % 2 for v in p], [v % 2 for v in g]
        m = metrics.mcc(pb, gb)
        assert -1.0 <= m <= 1.0
        assert _near(metrics.mcc([1 - v for v in pb], gb), -m)
        if 1 in pb or 1 in gb:
            binary = metrics.precision_recall_f1(pb, gb, "binary", positive=1)
            restricted = metrics.precision_recall_f1(pb, gb, "macro", labels=[1])
            assert binary == restricted

        x = (rng.random(n) * 200 - 100).tolist()
        y = (rng.random(n) * 200 - 100).tolist()
        assert metrics.mae(x, y) >= 0 and metrics.mae(x, y) == metrics.mae(y, x)
        assert metrics.mse(x, y) >= 0
        r = metrics.pearson(x, y)
        assert -1.0 <= r <= 1.0 and _near(r, metrics.pearson(y, x))
        a, b = float(rng.uniform(0.1, 10)), float(rng.uniform(-10, 10))
        assert _near(r, metrics.pearson([a * v + b for v in x], y))
        assert _near(r, metrics.pearson(x, [a * v + b for v in y]))
        rho = metrics.spearman(x, y)
        assert -1.0 <= rho <= 1.0 and _near(rho, metrics.spearman(y, x))

        words = ["a", "b", "c", "d"]
        ta = " ".join(rng.choice(words, size=int(rng.integers(0, 6))).tolist())
        tb = " ".join(rng.choice(words, size=int(rng.integers(0, 6))).tolist())
        tf = metrics.token_f1(ta, tb)
        assert 0.0 <= tf <= 1.0 and tf == metrics.token_f1(tb, ta)
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    note(f"{count} random inputs per kernel family in {elapsed:.1f} s")


# -- 7 ---------------------------------------------------------------------


def _synthetic_manifest(root: Path, n: int = 100_000) -> Path:
    rng = np.random.default_rng(3)
    ids = [f"ex{i:06d}" for i in range(n)]
    labels = np.array(["entailment", "neutral", "contradiction"])
    gold = rng.integers(0, 3, size=n)

    def dump(path, codes):
        lines = [f'{{"id": "{i}", "output": "{lab}"}}\n' for i, lab in zip(ids, labels[codes])]
        path.write_text("".join(lines), encoding="utf-8")

    dump(root / "gold.jsonl", gold)
    runs = []
    for seed in PAPER_SEEDS:
        wrong = rng.random(n) < rng.uniform(0.05, 0.15)
        pred = np.where(wrong, (gold + rng.integers(1, 3, size=n)) % 3, gold)
        dump(root / f"seed{seed}.jsonl", pred)
        runs.append({"seed": seed, "path": f"seed{seed}.jsonl"})
    manifest = root / "manifest.json"
    manifest.write_text(json.dumps({
        "task": "synthetic", "task_kind": "classification", "metric": "accuracy",
        "scorer": "indicator", "gold_path": "gold.jsonl", "runs": runs,
    }))
    return manifest


@pytest.mark.acceptance(7)
@pytest.mark.parametrize("fmt", ["json"])
def test_c7_eval_is_deterministic_and_fast(tmp_path, capsys, note, fmt):
    manifest = _synthetic_manifest(tmp_path)
    outs = [tmp_path / f"report{k}.{fmt}" for k in (1, 2)]
    start = time.perf_counter()
    for out in outs:
        assert main(["eval", "--manifest", str(manifest), "--out", str(out), "--format", fmt]) == 0
    elapsed = time.perf_counter() - start
    summaries = capsys.readouterr().out.splitlines()
    assert summaries[0] == summaries[1]
    assert outs[0].read_bytes() == outs[1].read_bytes()
    report = json.loads(outs[0].read_text())
    assert report["n_seeds"] == 10 and len(report["pairs"]) == 45
    assert report["n_examples"] == 100_000
    note(f"two evals of 10 seeds x 1e5 examples: byte-identical, {elapsed:.2f} s total")
    assert elapsed < 10.0


# -- 8 ---------------------------------------------------------------------

MALFORMED = {
    "duplicate_id": "DuplicateId",
    "nan_scalar": "ParseError",
    "missing_gold_id": "MissingId",
    "id_not_in_gold": "ExtraId",
    "duplicate_seed": "DuplicateSeed",
    "unknown_manifest_field": "SchemaError",
    "unimplemented_scorer": "SchemaError",
    "missing_gold_file": "InputFileNotFound",
}


@pytest.mark.acceptance(8)
@pytest.mark.parametrize("case", sorted(MALFORMED))
def test_c8_malformed_input_fails(case, tmp_path, capsys, note):
    src = FIXTURES / "malformed" / case
    work = tmp_path / case
    shutil.copytree(src, work)
    out = tmp_path / "report.md"
    code = main(["eval", "--manifest", str(work / "manifest.json"), "--out", str(out)])
    captured = capsys.readouterr()
    assert code != 0
    assert captured.err.startswith(f"error: {MALFORMED[case]}:")
    assert captured.out == ""
    assert not out.exists()
    note(f"{case}: {MALFORMED[case]}, exit {code}")
