"""Structured per-image annotation records and their wire format.

One annotation is one JSON object per line::

    {"image_id": "nsd-00042",
     "source": "annotator_a",
     "objects": [{"label": "dog", "count": 2, "semantic_category": "animal",
                  "color": "brown", "position": "foreground"}],
     "persons": [{"action": "surfing", "pose": "standing",
                  "interaction": {"verb": "holding", "object": "surfboard"}}],
     "scene": {"setting": "outdoor", "location": "beach"}}

``color``, ``position``, ``persons``, ``scene`` and every person field are
optional. Unknown semantic categories are mapped to ``other``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

SEMANTIC_CATEGORIES = (
    "animal",
    "vehicle",
    "food",
    "appliance",
    "electronic",
    "clothing",
    "household",
    "plant",
    "sport-equipment",
    "structure",
    "landscape-feature",
    "other",
)
POSITIONS = ("foreground", "background", "unknown")
SETTINGS = ("indoor", "outdoor")
SOURCES = ("annotator_a", "annotator_b", "merged")


@dataclass(frozen=True)
class ObjectEntry:
    label: str
    count: int
    semantic_category: str = "other"
    color: Optional[str] = None
    position: str = "unknown"


@dataclass(frozen=True)
class Interaction:
    verb: str
    object: str


@dataclass(frozen=True)
class PersonEntry:
    action: Optional[str] = None
    interaction: Optional[Interaction] = None
    pose: Optional[str] = None


@dataclass(frozen=True)
class SceneEntry:
    setting: str
    location: Optional[str] = None


@dataclass(frozen=True)
class ImageAnnotation:
    image_id: str
    objects: tuple[ObjectEntry, ...] = ()
    persons: tuple[PersonEntry, ...] = ()
    scene: Optional[SceneEntry] = None
    source: str = "annotator_a"

    def object(self, label: str) -> Optional[ObjectEntry]:
        for obj in self.objects:
            if obj.label == label:
                return obj
        return None

    @property
    def labels(self) -> frozenset[str]:
        return frozenset(obj.label for obj in self.objects)


@dataclass(frozen=True)
class RawAnnotation:
    """Annotator response body, before schema parsing."""

    image_id: str
    raw_text: str
    parse_status: str  # "ok" | "malformed"
    attempts: int = field(default=1, compare=False)


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def annotation_to_dict(a: ImageAnnotation) -> dict:
    out: dict = {"image_id": a.image_id, "source": a.source}
    out["objects"] = [
        _drop_none(
            {
                "label": o.label,
                "count": o.count,
                "semantic_category": o.semantic_category,
                "color": o.color,
                "position": o.position,
            }
        )
        for o in a.objects
    ]
    persons = []
    for p in a.persons:
        d = _drop_none({"action": p.action, "pose": p.pose})
        if p.interaction is not None:
            d["interaction"] = {"verb": p.interaction.verb, "object": p.interaction.object}
        persons.append(d)
    out["persons"] = persons
    if a.scene is not None:
        out["scene"] = _drop_none({"setting": a.scene.setting, "location": a.scene.location})
    return out
