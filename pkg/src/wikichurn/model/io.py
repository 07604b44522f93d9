"""Model file format.

A model file is UTF-8 JSON (canonical: sorted keys, compact separators)::

    {"format": "wikichurn-model", "format_version": "1.0",
     "header": {...provenance, e.g. config hash and seed...},
     "model": {...TrainedModel.to_dict()...}}

Readers accept any ``1.x`` version. Floats are written with ``repr`` precision,
so a reloaded model predicts bit-identically.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

from ..errors import SchemaMismatch
from .ensemble import TrainedModel

FORMAT = "wikichurn-model"
FORMAT_VERSION = "1.0"


def dumps_model(model: TrainedModel, header: Mapping[str, Any] | None = None) -> str:
    doc = {
        "format": FORMAT,
        "format_version": FORMAT_VERSION,
        "header": dict(header or {}),
        "model": model.to_dict(),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


def loads_model(text: str) -> tuple[TrainedModel, dict[str, Any]]:
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise SchemaMismatch("not a model file")
    version = str(doc.get("format_version", ""))
    if version.split(".")[0] != FORMAT_VERSION.split(".")[0]:
        raise SchemaMismatch(f"unsupported model format version {version!r}")
    return TrainedModel.from_dict(doc["model"]), doc.get("header", {})


def save_model(path: str | Path, model: TrainedModel, header: Mapping[str, Any] | None = None) -> None:
    Path(path).write_text(dumps_model(model, header) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> tuple[TrainedModel, dict[str, Any]]:
    return loads_model(Path(path).read_text(encoding="utf-8"))
