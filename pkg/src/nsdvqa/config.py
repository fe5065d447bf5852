"""Run configuration and reproducibility manifests.

Precedence, lowest to highest: built-in defaults, the YAML config file,
command-line flags, ``NSDVQA_<KEY>`` environment variables. Annotator
settings live under the ``annotator`` mapping and are overridden by
``NSDVQA_ANNOTATOR_<KEY>``.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Mapping, Optional

import yaml

from . import __version__

ENV_PREFIX = "NSDVQA_"
FORMAT_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    merge_threshold: float = 0.90
    min_support: int = 50
    max_share: float = 0.70
    neg_ratio: float = 0.5
    skew_mode: str = "downsample"
    density: float = 0.5
    lam: float = 1.0
    n_trials: int = 10_000
    n_stimuli: int = 200
    n_clusters: int = 128
    n_boot: int = 10_000
    alternative: str = "greater"
    jobs: int = 1
    subjects: tuple = ("1", "2", "5", "7")
    templates: Optional[str] = None
    annotator: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        checks = [
            ("merge_threshold", 0.0 <= self.merge_threshold <= 1.0, "[0, 1]"),
            ("min_support", self.min_support >= 0, "≥ 0"),
            ("max_share", 0.0 < self.max_share < 1.0, "(0, 1)"),
            ("neg_ratio", 0.0 <= self.neg_ratio < 1.0, "[0, 1)"),
            ("skew_mode", self.skew_mode in ("downsample", "drop"), "{downsample, drop}"),
            ("density", 0.0 <= self.density <= 1.0, "[0, 1]"),
            ("lam", self.lam >= 0.0, "≥ 0"),
            ("n_trials", self.n_trials >= 1, "≥ 1"),
            ("n_stimuli", self.n_stimuli >= 1, "≥ 1"),
            ("n_clusters", self.n_clusters >= 1, "≥ 1"),
            ("n_boot", self.n_boot >= 100, "≥ 100"),
            ("alternative", self.alternative in ("greater", "less", "two-sided"),
             "{greater, less, two-sided}"),
            ("jobs", self.jobs >= 1, "≥ 1"),
        ]
        for key, ok, allowed in checks:
            if not ok:
                raise ConfigError(f"{key}={getattr(self, key)!r} out of range, allowed {allowed}")
        return self

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True, default=list).encode()).hexdigest()


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(key: str, value):
    default = getattr(RunConfig(), key)
    try:
        if key == "subjects":
            if isinstance(value, str):
                value = [v for v in value.replace(",", " ").split() if v]
            return tuple(str(v) for v in value)
        if key == "annotator":
            if not isinstance(value, Mapping):
                raise TypeError("annotator must be a mapping")
            return dict(value)
        if key == "templates":
            return None if value in (None, "") else str(value)
        if isinstance(default, bool):
            return value if isinstance(value, bool) else str(value).lower() in {"1", "true", "yes"}
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError("not an integer")
            return int(value)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot use {value!r} ({exc})") from exc


def load_config(path=None, flags: Optional[Mapping] = None, environ: Optional[Mapping] = None) -> RunConfig:
    """Merge defaults, file, flags (None values ignored) and environment, then range-check."""
    values: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(data, Mapping):
            raise ConfigError(f"{path}: top level must be a mapping")
        unknown = set(data) - set(_FIELDS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update({k: _coerce(k, v) for k, v in data.items()})
    for k, v in (flags or {}).items():
        if k not in _FIELDS:
            raise ConfigError(f"unknown config key {k!r}")
        if v is not None:
            values[k] = _coerce(k, v)
    environ = os.environ if environ is None else environ
    for name in _FIELDS:
        if name == "annotator":
            continue
        raw = environ.get(ENV_PREFIX + name.upper())
        if raw is not None:
            values[name] = _coerce(name, raw)
    return RunConfig(**values).validate()


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(command: str, config: RunConfig, inputs, outputs) -> dict:
    stamp = os.environ.get("SOURCE_DATE_EPOCH")
    created = float(stamp) if stamp else time.time()
    return {
        "tool": "nsdvqa",
        "version": __version__,
        "format_version": FORMAT_VERSION,
        "command": command,
        "config_hash": config.digest(),
        "config": json.loads(json.dumps(asdict(config), default=list)),
        "inputs": {str(p): file_digest(p) for p in inputs if p is not None},
        "outputs": {str(p): file_digest(p) for p in outputs if p is not None and Path(p).is_file()},
        "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(created)),
    }


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
