import json
import math
from pathlib import Path

import pytest

from seedstab.model import AlignedRunSet, PredictionRecord, Run

FIXTURES = Path(__file__).parent / "fixtures"

PAPER_SEEDS = (42, 52, 62, 72, 82, 92, 102, 112, 122, 132)


def make_run(seed, outputs, ids=None, task="t"):
    ids = ids if ids is not None else [f"{i:04d}" for i in range(len(outputs))]
    return Run(seed=seed, task=task,
               records=tuple(PredictionRecord(i, o) for i, o in zip(ids, outputs)))


def make_run_set(preds_by_seed, gold, task_kind="classification", ids=None, task="t"):
    """Build an AlignedRunSet from parallel lists; ids default to zero-padded positions."""
    ids = ids if ids is not None else [f"{i:04d}" for i in range(len(gold))]
    runs = [make_run(seed, outs, ids, task) for seed, outs in preds_by_seed.items()]
    return AlignedRunSet(task_kind=task_kind, runs=runs, gold=dict(zip(ids, gold)))


def fig1_outputs():
    """The two-model illustration: both 60% accurate, only 20% of predictions shared.

    Gold is class 1 everywhere.  A is right on 1..6, B on 1, 2 and 7..10, and
    each wrong prediction uses its own label so no two wrong answers coincide.
    """
    gold = [1] * 10
    run_a = [1, 1, 1, 1, 1, 1, 2, 3, 4, 5]
    run_b = [1, 1, 6, 7, 8, 9, 1, 1, 1, 1]
    return run_a, run_b, gold


def write_jsonl(path, ids, outputs):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for i, o in zip(ids, outputs):
            f.write(json.dumps({"id": i, "output": o}) + "\n")


def write_manifest(dirpath, task, task_kind, metric, scorer, gold, runs, train_size=None):
    """Write gold and run files plus a manifest under ``dirpath``; return the manifest path."""
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    ids = sorted(gold)
    write_jsonl(dirpath / "gold.jsonl", ids, [gold[i] for i in ids])
    entries = []
    for seed, outs in runs.items():
        name = f"seed{seed}.jsonl"
        write_jsonl(dirpath / name, ids, [outs[i] for i in ids])
        entries.append({"seed": seed, "path": name})
    doc = {"task": task, "task_kind": task_kind, "metric": metric, "scorer": scorer,
           "gold_path": "gold.jsonl", "runs": entries}
    if train_size is not None:
        doc["train_size"] = train_size
    path = dirpath / "manifest.json"
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return path


def brute_force(preds_by_seed, gold):
    """Accuracy, VAR, CON and CCON by direct loops over ordered seed pairs and examples.

    No shared code with the package: accuracy is a match count, VAR is the
    population standard deviation of percent accuracies, and the per-pair
    values come from scanning every ordered pair (a, b) with a != b.
    """
    seeds = sorted(preds_by_seed)
    n = len(gold)
    acc = {}
    for s in seeds:
        hits = 0
        for t in range(n):
            if preds_by_seed[s][t] == gold[t]:
                hits += 1
        acc[s] = hits / n
    pct = [100.0 * acc[s] for s in seeds]
    mean_pct = sum(pct) / len(pct)
    var_pct = math.sqrt(sum((p - mean_pct) ** 2 for p in pct) / len(pct))

    con, ccon = {}, {}
    for a in seeds:
        for b in seeds:
            if a == b:
                continue
            same = both = 0
            for t in range(n):
                ya, yb = preds_by_seed[a][t], preds_by_seed[b][t]
                if ya == yb:
                    same += 1
                    if ya == gold[t]:
                        both += 1
            con[a, b] = same / n
            ccon[a, b] = both / n
    ordered = len(con)
    return {
        "acc": acc,
        "zeta_mean": sum(acc.values()) / len(acc),
        "var": var_pct,
        "con": con,
        "ccon": ccon,
        "con_mean": sum(con.values()) / ordered,
        "ccon_mean": sum(ccon.values()) / ordered,
    }


def random_instance(rng, max_n=200, max_s=6, max_labels=5):
    """Random classification instance: (preds_by_seed, gold) with 2 <= S <= max_s."""
    n = int(rng.integers(1, max_n + 1))
    s = int(rng.integers(2, max_s + 1))
    k = int(rng.integers(2, max_labels + 1))
    gold = rng.integers(0, k, size=n).tolist()
    seeds = sorted(rng.choice(1000, size=s, replace=False).tolist())
    preds = {}
    for seed in seeds:
        # mix of near-gold and independent runs so agreement spans [0, 1]
        flip = rng.random(n) < rng.random()
        noise = rng.integers(0, k, size=n).tolist()
        preds[seed] = [noise[t] if flip[t] else gold[t] for t in range(n)]
    return preds, gold


# -- acceptance bookkeeping ------------------------------------------------

ACCEPTANCE_TITLES = {
    1: "oracle equivalence",
    2: "sandwich invariants and bundled accuracy cells",
    3: "two-model illustration (60% accuracy, 20% overlap)",
    4: "VAR scale law and constant series",
    5: "training-size correlations",
    6: "metric kernels",
    7: "determinism and runtime of eval",
    8: "ingestion robustness",
}

_outcomes: dict[int, list[bool]] = {}
_notes: dict[int, list[str]] = {}


@pytest.fixture
def note(request):
    """Attach a line to the acceptance summary of the test's criterion."""
    marker = request.node.get_closest_marker("acceptance")
    number = marker.args[0] if marker else 0

    def add(text):
        _notes.setdefault(number, []).append(text)

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _outcomes.setdefault(marker.args[0], []).append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_TITLES):
        results = _outcomes.get(number)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {ACCEPTANCE_TITLES[number]}")
        for text in _notes.get(number, []):
            terminalreporter.write_line(f"    {text}")
