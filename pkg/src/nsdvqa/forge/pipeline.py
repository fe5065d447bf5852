"""End-to-end dataset forging from two annotators' records."""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..annotations.schema import ImageAnnotation
from .dataset import QAPair, canonical_order
from .filters import CategoryHistogram, balance_skew, dataset_stats, enforce_support
from .generate import build_vocabulary, generate_negatives, generate_qa
from .labels import LabelMap, apply_label_map, merge_labels
from .templates import TemplateSet
from .verify import DiscardLog, verify_counts

logger = logging.getLogger(__name__)


def stream_seed(seed: int, *keys) -> np.random.Generator:
    """Independent generator for (seed, keys...); string keys are hashed stably."""
    ints = [int(seed)]
    for k in keys:
        if isinstance(k, str):
            ints.append(int.from_bytes(hashlib.sha256(k.encode("utf-8")).digest()[:8], "little"))
        else:
            ints.append(int(k))
    return np.random.default_rng(ints)


@dataclass
class ForgeParams:
    merge_threshold: float = 0.90
    min_support: int = 50
    max_share: float = 0.70
    neg_ratio: float = 0.5
    skew_mode: str = "downsample"
    seed: int = 0


@dataclass
class ForgeResult:
    dataset: list[QAPair]
    verified: list[ImageAnnotation]
    label_map: LabelMap
    discards: DiscardLog
    unpaired: list[str] = field(default_factory=list)

    @property
    def stats(self) -> CategoryHistogram:
        return dataset_stats(self.dataset)


def forge(
    annotations_a: Sequence[ImageAnnotation],
    annotations_b: Sequence[ImageAnnotation],
    params: ForgeParams = ForgeParams(),
    embeddings: Optional[Mapping[str, Sequence[float]]] = None,
    templates: Optional[TemplateSet] = None,
    jobs: int = 1,
) -> ForgeResult:
    templates = templates or TemplateSet.load()
    by_b = {b.image_id: b for b in annotations_b}
    discards = DiscardLog()
    verified, unpaired = [], []
    for a in sorted(annotations_a, key=lambda x: x.image_id):
        b = by_b.get(a.image_id)
        if b is None:
            unpaired.append(a.image_id)
            continue
        verified.append(verify_counts(a, b, discards))
    unpaired.extend(sorted(set(by_b) - {a.image_id for a in annotations_a}))
    logger.info("verified %d images, %d objects discarded, %d unpaired",
                len(verified), len(discards), len(unpaired))

    if embeddings is not None:
        freq = {lbl: f for lbl, (f, _) in build_vocabulary(verified).items()}
        label_map = merge_labels(freq, embeddings, params.merge_threshold)
        verified = [apply_label_map(a, label_map) for a in verified]
    else:
        label_map = LabelMap()

    def one(a):
        return generate_qa(a, templates, stream_seed(params.seed, "qa", a.image_id))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_image = list(pool.map(one, verified))
    else:
        per_image = [one(a) for a in verified]
    pairs = [p for chunk in per_image for p in chunk]

    vocab = build_vocabulary(verified)
    pairs = generate_negatives(
        canonical_order(pairs), {a.image_id: a for a in verified}, vocab,
        stream_seed(params.seed, "negatives"), params.neg_ratio, templates,
    )
    pairs = balance_skew(canonical_order(pairs), params.max_share,
                         rng=stream_seed(params.seed, "skew"), mode=params.skew_mode)
    pairs = enforce_support(pairs, params.min_support)
    return ForgeResult(canonical_order(pairs), verified, label_map, discards, unpaired)
