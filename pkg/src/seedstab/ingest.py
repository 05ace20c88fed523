"""Loading prediction runs, gold outputs and evaluation manifests.

Run and gold files are JSON lines, one object per line with exactly two
fields::

    {"id": "q1", "output": "entailment"}
    {"id": "q2", "output": 0.75}
    {"id": "q3", "output": ["B-PER", "I-PER", "O"]}

Files ending in ``.csv`` are read as CSV with an ``id,output`` header; this
is accepted for classification (labels stay strings) and regression only.

The manifest is a single JSON document::

    {
      "task": "MRPC",
      "task_kind": "classification",
      "metric": "accuracy",
      "scorer": "indicator",
      "gold_path": "gold.jsonl",
      "runs": [{"seed": 42, "path": "seed42.jsonl"}, ...],
      "train_size": 3668
    }

Relative paths are resolved against the manifest's directory.  Unknown fields
are rejected.
"""

from __future__ import annotations

import csv
import gc
import io
import json
import math
from contextlib import contextmanager
from dataclasses import dataclass
from functools import partial
from operator import itemgetter, lt
from pathlib import Path
from typing import Any, Iterator

from seedstab.errors import (
    DuplicateId,
    DuplicateSeed,
    EmptyFile,
    InputFileNotFound,
    MetricError,
    ParseError,
    SchemaError,
    UnimplementedExtension,
    VariantMismatch,
)
from seedstab.model import (
    METRICS_FOR_KIND,
    TASK_KINDS,
    TEXT_KINDS,
    AlignedRunSet,
    MetricKind,
    PredictionRecord,
    Run,
    normalize_text,
    validate_run_set,
)
from seedstab.stability import scorer_from_name


@dataclass(frozen=True)
class RunEntry:
    seed: int
    path: Path


@dataclass(frozen=True)
class EvaluationManifest:
    task: str
    task_kind: str
    metric: MetricKind
    scorer: str
    gold_path: Path
    runs: tuple[RunEntry, ...]
    train_size: int | None = None


def _read_text(path: str | Path) -> str:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except FileNotFoundError:
        raise InputFileNotFound(str(path)) from None
    except IsADirectoryError:
        raise ParseError("is a directory", str(path)) from None
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = raw[: exc.start].count(b"\n") + 1
        raise ParseError("not valid UTF-8", str(path), line) from None


def _reject_constant(name: str) -> Any:
    raise ValueError(f"non-finite number {name} is not allowed")


def _numbered_lines(text: str) -> list[tuple[int, str]]:
    # split on LF only: U+2028 and friends may legally appear inside JSON strings
    out = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.endswith("\r"):
            line = line[:-1]
        if line.strip():
            out.append((lineno, line))
    return out


_DECODER = json.JSONDecoder(parse_constant=_reject_constant)


def _parse_jsonl(path: str, lines: list[tuple[int, str]]) -> list[Any]:
    decode = _DECODER.decode
    values = []
    for lineno, line in lines:
        try:
            values.append(decode(line))
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, path, lineno, exc.colno) from None
        except ValueError as exc:
            raise ParseError(str(exc), path, lineno) from None
    return values


def _convert_output(value: Any, task_kind: str, path: str, lineno: int) -> Any:
    if task_kind == "classification":
        if isinstance(value, (str, int)) and not isinstance(value, bool):
            return value
        expected = "a string or integer class label"
    elif task_kind == "regression":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            try:
                out = float(value)
            except OverflowError:
                raise ParseError(f"number {value} does not fit a double", path, lineno) from None
            if not math.isfinite(out):
                raise ParseError("non-finite scalar", path, lineno)
            return out
        expected = "a number"
    elif task_kind == "sequence_labeling":
        if isinstance(value, list) and value and all(isinstance(t, str) for t in value):
            return tuple(value)
        expected = "a non-empty array of strings"
    elif task_kind in TEXT_KINDS:
        if isinstance(value, str):
            return normalize_text(value)
        expected = "a string"
    else:
        raise VariantMismatch(f"unknown task kind {task_kind!r}")
    raise VariantMismatch(
        f"{path}:{lineno}: {task_kind} output must be {expected}, got {json.dumps(value)}"
    )


def _records_jsonl(path: str, text: str, task_kind: str) -> Iterator[tuple[int, str, Any]]:
    lines = _numbered_lines(text)
    for (lineno, _), obj in zip(lines, _parse_jsonl(path, lines)):
        if not isinstance(obj, dict):
            raise ParseError("each line must be a JSON object", path, lineno)
        if obj.keys() != {"id", "output"}:
            raise ParseError(
                f"expected exactly the fields 'id' and 'output', got {sorted(obj)}", path, lineno
            )
        eid = obj["id"]
        if not isinstance(eid, str) or not eid:
            raise ParseError(f"id must be a non-empty string, got {json.dumps(eid)}", path, lineno)
        yield lineno, eid, _convert_output(obj["output"], task_kind, path, lineno)


def _records_csv(path: str, text: str, task_kind: str) -> Iterator[tuple[int, str, Any]]:
    if task_kind not in ("classification", "regression"):
        raise VariantMismatch(f"{path}: CSV input is only accepted for classification and regression")
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if header is None:
        return
    if [h.strip() for h in header] != ["id", "output"]:
        raise ParseError(f"CSV header must be 'id,output', got {','.join(header)!r}", path, 1)
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 columns, got {len(row)}", path, lineno)
        eid, raw = row
        if not eid:
            raise ParseError("id must be non-empty", path, lineno)
        if task_kind == "classification":
            yield lineno, eid, raw
            continue
        try:
            value = float(raw)
        except ValueError:
            raise ParseError(f"not a number: {raw!r}", path, lineno) from None
        if not math.isfinite(value):
            raise ParseError(f"non-finite scalar {raw!r}", path, lineno)
        yield lineno, eid, value


def _bulk_outputs(outputs: list, task_kind: str) -> list | None:
    types = set(map(type, outputs))
    if task_kind == "classification":
        return outputs if types <= {str, int} else None
    if task_kind == "regression":
        if not types <= {int, float}:
            return None
        try:
            values = list(map(float, outputs))
        except OverflowError:
            return None
        return values if all(map(math.isfinite, values)) else None
    if task_kind == "sequence_labeling":
        if types <= {list} and all(v and set(map(type, v)) <= {str} for v in outputs):
            return list(map(tuple, outputs))
        return None
    return [normalize_text(v) for v in outputs] if types <= {str} else None


# NamedTuple's generated __new__ runs Python code per record; going through
# tuple.__new__ directly builds the same object several times faster.
_record = partial(tuple.__new__, PredictionRecord)


def _is_sorted(keys: list) -> bool:
    return all(map(lt, keys, keys[1:]))


def _fast_jsonl(text: str, task_kind: str) -> list[PredictionRecord] | None:
    """Parse a well-formed JSONL file in one decoder call, or return None.

    Each line is wrapped in its own array and lines are joined by a raw
    newline, which a JSON string cannot contain, so a value can only span
    lines through array nesting; the shape checks below reject that.  Any
    anomaly returns None and the caller re-reads line by line to report it.
    """
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    # a blank line decodes to an empty array and fails the shape check
    if not lines:
        return None
    try:
        wrapped = _DECODER.decode("[[" + "],\n[".join(lines) + "]]")
    except ValueError:
        return None
    if len(wrapped) != len(lines) or set(map(len, wrapped)) != {1}:
        return None
    objs = list(map(itemgetter(0), wrapped))
    if set(map(type, objs)) != {dict} or set(map(len, objs)) != {2}:
        return None
    try:
        ids = list(map(itemgetter("id"), objs))
        outputs = list(map(itemgetter("output"), objs))
    except KeyError:
        return None
    id_set = set(ids)
    if set(map(type, ids)) != {str} or "" in id_set or len(id_set) != len(ids):
        return None
    converted = _bulk_outputs(outputs, task_kind)
    if converted is None:
        return None
    return list(map(_record, zip(ids, converted)))


@contextmanager
def _gc_paused() -> Iterator[None]:
    # Loading builds millions of small acyclic containers; the cyclic
    # collector would rescan them over and over for nothing.
    enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if enabled:
            gc.enable()


def _load_records(path: str | Path, task_kind: str) -> list[PredictionRecord]:
    with _gc_paused():
        return _load_records_unpaused(path, task_kind)


def _load_records_unpaused(path: str | Path, task_kind: str) -> list[PredictionRecord]:
    if task_kind not in TASK_KINDS:
        raise VariantMismatch(f"unknown task kind {task_kind!r}")
    spath = str(path)
    text = _read_text(path)
    if text.startswith("\ufeff"):
        text = text[1:]
    is_csv = spath.lower().endswith(".csv")
    if not is_csv:
        fast = _fast_jsonl(text, task_kind)
        if fast is not None:
            return fast
    reader = _records_csv if is_csv else _records_jsonl
    out: list[PredictionRecord] = []
    seen: set[str] = set()
    for lineno, eid, value in reader(spath, text, task_kind):
        if eid in seen:
            raise DuplicateId(eid, f"{spath}:{lineno}")
        seen.add(eid)
        out.append(PredictionRecord(eid, value))
    if not out:
        raise EmptyFile(spath)
    return out


def load_run(path: str | Path, task_kind: str, seed: int = 0, task: str = "") -> Run:
    """Read one run file.  Records keep file order."""
    return Run(seed=seed, task=task, records=tuple(_load_records(path, task_kind)))


def load_gold(path: str | Path, task_kind: str) -> dict[str, Any]:
    return dict(_load_records(path, task_kind))


# -- manifest --------------------------------------------------------------

_MANIFEST_FIELDS = {"task", "task_kind", "metric", "scorer", "gold_path", "runs", "train_size"}
_REQUIRED_FIELDS = _MANIFEST_FIELDS - {"train_size"}
_RUN_FIELDS = {"seed", "path"}


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _nonempty_str(doc: dict, key: str, where: str) -> str:
    value = doc[key]
    if not isinstance(value, str) or not value.strip():
        raise SchemaError(key, "must be a non-empty string", where)
    return value


def parse_manifest(doc: Any, base_dir: Path, where: str = "<manifest>") -> EvaluationManifest:
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "manifest must be a JSON object", where)
    for key in sorted(doc):
        if key not in _MANIFEST_FIELDS:
            raise SchemaError(key, "unknown field", where)
    for key in sorted(_REQUIRED_FIELDS):
        if key not in doc:
            raise SchemaError(key, "missing required field", where)

    task = _nonempty_str(doc, "task", where)
    task_kind = doc["task_kind"]
    if task_kind not in TASK_KINDS:
        raise SchemaError("task_kind", f"must be one of {list(TASK_KINDS)}", where)

    try:
        metric = MetricKind(doc["metric"])
    except ValueError:
        raise SchemaError("metric", f"unknown metric {doc['metric']!r}", where) from None
    if metric not in METRICS_FOR_KIND[task_kind]:
        raise SchemaError("metric", f"{metric.value} does not apply to {task_kind}", where)

    scorer_name = doc["scorer"]
    if not isinstance(scorer_name, str):
        raise SchemaError("scorer", "must be a string", where)
    try:
        scorer = scorer_from_name(scorer_name)
    except UnimplementedExtension:
        raise SchemaError("scorer", f"{scorer_name!r} is an unimplemented extension", where) from None
    except MetricError as exc:
        raise SchemaError("scorer", str(exc), where) from None
    if not scorer.supports(task_kind):
        raise SchemaError("scorer", f"{scorer_name} does not apply to {task_kind}", where)

    gold_path = base_dir / _nonempty_str(doc, "gold_path", where)

    runs_doc = doc["runs"]
    if not isinstance(runs_doc, list) or not runs_doc:
        raise SchemaError("runs", "must be a non-empty array", where)
    runs = []
    seen_seeds: set[int] = set()
    for i, entry in enumerate(runs_doc):
        field = f"runs[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(field, "must be an object with 'seed' and 'path'", where)
        for key in sorted(entry):
            if key not in _RUN_FIELDS:
                raise SchemaError(f"{field}.{key}", "unknown field", where)
        for key in sorted(_RUN_FIELDS):
            if key not in entry:
                raise SchemaError(f"{field}.{key}", "missing required field", where)
        seed = entry["seed"]
        if not _is_int(seed):
            raise SchemaError(f"{field}.seed", "must be an integer", where)
        if seed in seen_seeds:
            raise DuplicateSeed(seed)
        seen_seeds.add(seed)
        path = entry["path"]
        if not isinstance(path, str) or not path.strip():
            raise SchemaError(f"{field}.path", "must be a non-empty string", where)
        runs.append(RunEntry(seed=seed, path=base_dir / path))

    train_size = doc.get("train_size")
    if train_size is not None and (not _is_int(train_size) or train_size <= 0):
        raise SchemaError("train_size", "must be a positive integer", where)

    return EvaluationManifest(
        task=task,
        task_kind=task_kind,
        metric=metric,
        scorer=scorer_name,
        gold_path=gold_path,
        runs=tuple(runs),
        train_size=train_size,
    )


def load_manifest(path: str | Path) -> EvaluationManifest:
    text = _read_text(path)
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, str(path), exc.lineno, exc.colno) from None
    except ValueError as exc:
        raise ParseError(str(exc), str(path)) from None
    return parse_manifest(doc, Path(path).parent, str(path))


def assemble(manifest: EvaluationManifest) -> AlignedRunSet:
    """Load every file named by ``manifest`` into a validated, id-sorted run set."""
    with _gc_paused():
        return _assemble(manifest)


def _assemble(manifest: EvaluationManifest) -> AlignedRunSet:
    gold = load_gold(manifest.gold_path, manifest.task_kind)
    runs = []
    for entry in sorted(manifest.runs, key=lambda e: e.seed):
        run = load_run(entry.path, manifest.task_kind, seed=entry.seed, task=manifest.task)
        records = run.records
        if not _is_sorted(list(map(itemgetter(0), records))):
            records = tuple(sorted(records, key=itemgetter(0)))
        runs.append(Run(seed=run.seed, task=run.task, records=records))
    run_set = AlignedRunSet(
        task_kind=manifest.task_kind,
        runs=tuple(runs),
        gold=gold if _is_sorted(list(gold)) else {k: gold[k] for k in sorted(gold)},
        train_size=manifest.train_size,
    )
    return validate_run_set(run_set)


def serialize_run_set(run_set: AlignedRunSet) -> str:
    """Canonical JSON text for a run set; equal sets give identical bytes."""
    def enc(v: Any) -> Any:
        return list(v) if isinstance(v, tuple) else v

    doc = {
        "task": run_set.task,
        "task_kind": run_set.task_kind,
        "train_size": run_set.train_size,
        "gold": [[k, enc(run_set.gold[k])] for k in sorted(run_set.gold)],
        "runs": [
            {
                "seed": run.seed,
                "records": [[r.example_id, enc(r.output)]
                            for r in sorted(run.records, key=lambda r: r.example_id)],
            }
            for run in run_set.sorted_runs()
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
