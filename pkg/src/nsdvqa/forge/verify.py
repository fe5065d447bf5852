from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

from ..annotations.schema import ImageAnnotation

logger = logging.getLogger(__name__)


@dataclass
class DiscardLog:
    """Objects dropped during count verification, as (image_id, label, count_a, count_b)."""

    entries: list[tuple[str, str, int, int]] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)


def verify_counts(a: ImageAnnotation, b: ImageAnnotation, log: DiscardLog | None = None) -> ImageAnnotation:
    """Keep only objects both annotators count identically and non-zero.

    Attributes (category, color, position), persons and scene come from ``a``;
    ``b`` only contributes counts. An object missing from ``b`` counts as 0.
    """
    if a.image_id != b.image_id:
        raise ValueError(f"image_id mismatch: {a.image_id!r} vs {b.image_id!r}")
    counts_b = {o.label: o.count for o in b.objects}
    kept = []
    for obj in a.objects:
        cb = counts_b.get(obj.label, 0)
        if obj.count == cb and obj.count > 0:
            kept.append(obj)
        else:
            logger.debug("discard %s/%s: counts %d vs %d", a.image_id, obj.label, obj.count, cb)
            if log is not None:
                log.entries.append((a.image_id, obj.label, obj.count, cb))
    if log is not None:
        labels_a = a.labels
        for obj in b.objects:
            if obj.label not in labels_a:
                log.entries.append((a.image_id, obj.label, 0, obj.count))
    return replace(a, objects=tuple(kept), source="merged")
