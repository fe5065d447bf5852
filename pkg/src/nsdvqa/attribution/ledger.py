"""Masking trials, their line-delimited ledger, and the regression design.

Ledger file: the first line is ``{"metadata": {...}}``; every further line is
``{"trial_id": int, "mask": "0110...", "scores": {category: accuracy}}`` with
bit 1 meaning the cluster was included. A score of ``null`` marks a category
that had no questions in that trial's stimulus subset.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .._validation import check_fraction
from ..annotations.parse import iter_lines


class LedgerError(ValueError):
    pass


def sample_mask(rng: np.random.Generator, n_clusters: int = 128, density: float = 0.5) -> np.ndarray:
    """Each cluster is masked out (bit 0) independently with probability ``density``."""
    check_fraction(density, "density")
    return (rng.random(n_clusters) >= density).astype(np.uint8)


def mask_to_str(mask) -> str:
    return "".join("1" if b else "0" for b in np.asarray(mask).ravel())


def mask_from_str(s: str) -> np.ndarray:
    if not s or set(s) - {"0", "1"}:
        raise LedgerError(f"mask must be a non-empty 0/1 string, got {s[:20]!r}")
    return np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0")


@dataclass
class MaskTrial:
    trial_id: int
    mask: np.ndarray
    scores: dict[str, Optional[float]]

    def to_dict(self) -> dict:
        return {"trial_id": self.trial_id, "mask": mask_to_str(self.mask),
                "scores": {k: self.scores[k] for k in sorted(self.scores)}}


@dataclass
class TrialLedger:
    trials: list[MaskTrial]
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.trials)

    @property
    def categories(self) -> list[str]:
        return sorted(self.trials[0].scores) if self.trials else []

    def validate(self) -> None:
        if not self.trials:
            raise LedgerError("ledger has no trials")
        declared = self.metadata.get("n_completed")
        if declared is not None and declared != len(self.trials):
            raise LedgerError(f"ledger declares {declared} trials but holds {len(self.trials)}")
        width = len(self.trials[0].mask)
        cats = set(self.trials[0].scores)
        for t in self.trials:
            if len(t.mask) != width:
                raise LedgerError(f"trial {t.trial_id}: mask length {len(t.mask)} != {width}")
            if set(t.scores) != cats:
                raise LedgerError(f"trial {t.trial_id}: inconsistent category set")
            for c, v in t.scores.items():
                if v is not None and not 0.0 <= v <= 1.0:
                    raise LedgerError(f"trial {t.trial_id}: score {c}={v} outside [0, 1]")

    def dumps(self) -> str:
        lines = [json.dumps({"metadata": self.metadata}, sort_keys=True)]
        lines += [json.dumps(t.to_dict(), sort_keys=True) for t in self.trials]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def read(cls, source) -> "TrialLedger":
        metadata, trials = {}, []
        for line_no, line in enumerate(iter_lines(source), 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                if "metadata" in d:
                    metadata = d["metadata"]
                    continue
                trials.append(MaskTrial(int(d["trial_id"]), mask_from_str(d["mask"]),
                                        {k: (None if v is None else float(v))
                                         for k, v in d["scores"].items()}))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise LedgerError(f"line {line_no}: {exc}") from exc
        ledger = cls(trials, metadata)
        ledger.validate()
        return ledger


def assemble_design(ledger: TrialLedger) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Stack trials into X (N×K mask bits) and Y (N×C scores, NaN where absent)."""
    ledger.validate()
    cats = ledger.categories
    X = np.vstack([t.mask for t in ledger.trials]).astype(float)
    Y = np.array([[math.nan if t.scores[c] is None else t.scores[c] for c in cats]
                  for t in ledger.trials], dtype=float)
    return X, Y, cats
