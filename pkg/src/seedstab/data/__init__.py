"""Bundled fixtures transcribed from published GLUE/SuperGLUE seed-stability results.

``table2_roberta.json`` / ``table2_llama.json``
    Summary-only reports (ten seeds, 45 pairs) for RoBERTa-large and
    Llama3.2-3B: mean zeta, VAR, CON, CCON and the spread of CON/CCON over
    pairs.  zeta is MCC for CoLA and accuracy elsewhere.
``table2_accuracy_cells.json``
    The 22 accuracy-valued reports of both models (CoLA excluded), task
    names prefixed with the model.
``train_sizes.json``
    Training-set size per task.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

FIXTURES = ("table2_roberta", "table2_llama", "table2_accuracy_cells", "train_sizes")


def fixture_path(name: str) -> Path:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return Path(str(resources.files(__name__).joinpath(f"{name}.json")))
