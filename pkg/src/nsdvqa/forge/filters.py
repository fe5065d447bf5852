"""Corpus-level support and answer-skew filters, plus per-category statistics."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .._validation import check_fraction
from .dataset import QAPair, canonical_order


def enforce_support(dataset: Sequence[QAPair], min_support: int = 50) -> list[QAPair]:
    """Drop every category with fewer than ``min_support`` pairs."""
    if min_support < 0:
        raise ValueError("min_support must be non-negative")
    counts = Counter(p.category for p in dataset)
    return [p for p in dataset if counts[p.category] >= min_support]


def _dominant(answers: Counter) -> tuple[str, int]:
    return min(answers.items(), key=lambda kv: (-kv[1], kv[0]))


def _cap(rest: int, max_share: float) -> int:
    """Largest k with k / (k + rest) ≤ max_share."""
    if max_share >= 1.0:
        raise ValueError("max_share must be below 1")
    k = int(np.floor(max_share * rest / (1.0 - max_share) + 1e-9))
    while k > 0 and k / (k + rest) > max_share:
        k -= 1
    return k


def balance_skew(dataset: Sequence[QAPair], max_share: float = 0.70, rng=None,
                 mode: str = "downsample") -> list[QAPair]:
    """Bring each category's most frequent answer to at most ``max_share`` of the category.

    ``mode="downsample"`` removes uniformly chosen pairs carrying the dominant
    answer; other answers are never touched, so a single-answer category is
    emptied.  ``mode="drop"`` removes skewed categories outright.  Returns the
    surviving pairs in input order.
    """
    check_fraction(max_share, "max_share", high_open=True)
    if mode not in ("downsample", "drop"):
        raise ValueError(f"unknown skew mode {mode!r}")
    rng = np.random.default_rng(0) if rng is None else rng
    by_cat: dict[str, list[int]] = defaultdict(list)
    for i, p in enumerate(dataset):
        by_cat[p.category].append(i)
    removed = set()
    for category in sorted(by_cat):
        idx = by_cat[category]
        while idx:
            answers = Counter(dataset[i].answer for i in idx)
            top, n_top = _dominant(answers)
            if n_top / len(idx) <= max_share:
                break
            if mode == "drop":
                removed.update(idx)
                break
            keep = _cap(len(idx) - n_top, max_share)
            top_idx = np.array([i for i in idx if dataset[i].answer == top])
            drop = {int(top_idx[j]) for j in rng.choice(len(top_idx), size=len(top_idx) - keep,
                                                        replace=False)}
            removed.update(drop)
            # only loops again when max_share < 0.5 lets another answer take over
            idx = [i for i in idx if i not in drop]
    return [p for i, p in enumerate(dataset) if i not in removed]


@dataclass
class CategoryHistogram:
    counts: dict[str, int] = field(default_factory=dict)
    answers: dict[str, dict[str, float]] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def dominant_share(self, category: str) -> float:
        dist = self.answers.get(category) or {}
        return max(dist.values(), default=0.0)


def dataset_stats(dataset: Sequence[QAPair], categories: Sequence[str] = ()) -> CategoryHistogram:
    """Exact per-category counts and answer frequency distributions.

    ``categories`` lists bins to report even when empty.
    """
    counts = Counter({c: 0 for c in categories})
    answers: dict[str, Counter] = defaultdict(Counter)
    for p in dataset:
        counts[p.category] += 1
        answers[p.category][p.answer] += 1
    hist = CategoryHistogram()
    for c in sorted(counts):
        hist.counts[c] = counts[c]
        n = counts[c]
        hist.answers[c] = {a: k / n for a, k in sorted(answers[c].items())} if n else {}
    return hist


def filter_dataset(dataset, min_support=50, max_share=0.70, rng=None, mode="downsample"):
    """Skew balancing followed by the support filter, in canonical order."""
    balanced = balance_skew(canonical_order(dataset), max_share, rng=rng, mode=mode)
    return enforce_support(balanced, min_support)
