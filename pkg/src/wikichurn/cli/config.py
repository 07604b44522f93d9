"""Run configuration: a JSON file plus dotted-name command-line overrides."""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path
from typing import Any, Mapping

from ..errors import ConfigError
from ..features.matrix import parse_groups
from ..model.ensemble import KINDS, Hyperparams

DEFAULTS: dict[str, Any] = {
    "source": {"kind": "fixture", "fixture": None, "live": {}, "missing_list": None, "pool": []},
    "cutoff_year": 2020,
    "window": 50,
    "harvest": {"pages_per_ns": 20, "revisions": 100, "top_k": 10},
    "split": {"train_fraction": 0.8, "stratified": True},
    "classifier": "forest",
    "hyperparams": {},
    "groups": "g1,g4,g5",
    "features": {"encoder": "hashing", "use_dictionary": True, "lexicon_dir": None},
    "ablation": {"kinds": list(KINDS), "combos": None},
    "explain": {
        "n_samples": 5000,
        "kernel_width": 0.75,
        "ridge": 1.0,
        "k": 5,
        "repeats": 10,
    },
    "min_confidence": 0.8,
    "as_of": 0,
    "workers": 1,
    "out": "run",
    "seed": None,
}

# settings that change how, not what, is computed
_HASH_EXCLUDED = ("workers", "out")


def _merge(base: dict[str, Any], extra: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        name = f"{prefix}{key}"
        if key not in out:
            raise ConfigError(f"unknown config field {name!r}")
        if isinstance(out[key], dict) and key not in ("hyperparams", "live"):
            if not isinstance(value, Mapping):
                raise ConfigError(f"config field {name!r} must be an object")
            out[key] = _merge(out[key], value, f"{name}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_value(text: str) -> Any:
    """JSON literal when it parses (numbers, booleans, null, lists), else the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_dotted(cfg: dict[str, Any], dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    node = cfg
    for i, part in enumerate(parts[:-1]):
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown config field {'.'.join(parts[: i + 1])!r}")
        node = node[part]
    leaf = parts[-1]
    free = parts[0] in ("hyperparams",) or parts[:2] == ["source", "live"]
    if leaf not in node and not free:
        raise ConfigError(f"unknown config field {dotted!r}")
    node[leaf] = value


class RunConfig:
    """Validated configuration; ``base_dir`` anchors relative paths."""

    def __init__(self, data: dict[str, Any], base_dir: Path):
        self.data = data
        self.base_dir = base_dir

    @classmethod
    def build(
        cls,
        path: str | Path | None = None,
        overrides: Mapping[str, Any] | None = None,
    ) -> RunConfig:
        data = copy.deepcopy(DEFAULTS)
        base = Path.cwd()
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise ConfigError(f"config file not found: {p}")
            try:
                loaded = json.loads(p.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {p} is not valid JSON: {exc}") from None
            if not isinstance(loaded, dict):
                raise ConfigError(f"config file {p} must hold a JSON object")
            data = _merge(data, loaded)
            base = p.resolve().parent
        for dotted, value in (overrides or {}).items():
            set_dotted(data, dotted, value)
        cfg = cls(data, base)
        cfg.validate()
        return cfg

    def __getitem__(self, key: str) -> Any:
        return self.data[key]

    def path(self, value: str | None) -> Path | None:
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def validate(self) -> None:
        d = self.data
        seed = d["seed"]
        if seed is None:
            raise ConfigError("a seed is required (set `seed` in the config or pass --seed)")
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
        if d["classifier"] not in KINDS:
            raise ConfigError(f"classifier must be one of {KINDS}, got {d['classifier']!r}")
        try:
            parse_groups(d["groups"])
            Hyperparams.from_dict(d["hyperparams"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        for kind in d["ablation"]["kinds"]:
            if kind not in KINDS:
                raise ConfigError(f"ablation kind {kind!r} unknown")
        try:
            for combo in d["ablation"]["combos"] or ():
                parse_groups(combo)
        except (ValueError, AttributeError) as exc:
            raise ConfigError(f"bad ablation combo: {exc}") from None
        if not 0.0 <= float(d["min_confidence"]) <= 1.0:
            raise ConfigError("min_confidence must lie in [0, 1]")
        if not 0.0 < float(d["split"]["train_fraction"]) < 1.0:
            raise ConfigError("split.train_fraction must lie in (0, 1)")
        if int(d["workers"]) < 1:
            raise ConfigError("workers must be >= 1")
        src = d["source"]
        if src["kind"] not in ("fixture", "live"):
            raise ConfigError(f"source.kind must be 'fixture' or 'live', got {src['kind']!r}")
        if src["kind"] == "fixture" and not src["fixture"]:
            raise ConfigError("source.fixture must name a fixture bundle directory")
        if src["kind"] == "live" and not src["missing_list"]:
            raise ConfigError("live sources need source.missing_list (a missing-list snapshot file)")
        enc = d["features"]["encoder"]
        if enc not in ("hashing", "none") and not self.path(enc).is_file():
            raise ConfigError(f"embedding file not found: {self.path(enc)}")
        lex = d["features"]["lexicon_dir"]
        if lex is not None and not self.path(lex).is_dir():
            raise ConfigError(f"lexicon directory not found: {self.path(lex)}")

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def out(self) -> Path:
        return self.path(self.data["out"])

    def hash(self) -> str:
        hashed = {k: v for k, v in self.data.items() if k not in _HASH_EXCLUDED}
        blob = json.dumps(hashed, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def header(self, command: str) -> dict[str, Any]:
        return {"command": command, "config_hash": self.hash(), "seed": self.seed}
