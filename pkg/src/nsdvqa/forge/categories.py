"""The 23 evaluation categories and how each one reads an annotation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class CategorySpec:
    name: str
    kind: str  # presence | person | open_class | counting | color | position | scene | location | action | holding | pose
    answer_form: str  # open | binary
    semantic: Optional[str] = None


_PRESENCE = {
    "animal Y/N": "animal",
    "appliance Y/N": "appliance",
    "clothing Y/N": "clothing",
    "electronic Y/N": "electronic",
    "food Y/N": "food",
    "household Y/N": "household",
    "landscape Y/N": "landscape-feature",
    "plant Y/N": "plant",
    "sport Y/N": "sport-equipment",
    "structure Y/N": "structure",
    "vehicle Y/N": "vehicle",
}
_OPEN_CLASS = {"animal": "animal", "food": "food", "vehicle": "vehicle"}

CATEGORIES: dict[str, CategorySpec] = {}
for _name, _sem in _PRESENCE.items():
    CATEGORIES[_name] = CategorySpec(_name, "presence", "binary", _sem)
CATEGORIES["person Y/N"] = CategorySpec("person Y/N", "person", "binary")
for _name, _sem in _OPEN_CLASS.items():
    CATEGORIES[_name] = CategorySpec(_name, "open_class", "open", _sem)
for _name in ("counting", "color", "position", "scene", "location", "action", "holding", "pose"):
    CATEGORIES[_name] = CategorySpec(_name, _name, "open")
CATEGORIES = dict(sorted(CATEGORIES.items()))

CATEGORY_NAMES = tuple(CATEGORIES)
BINARY_CATEGORIES = tuple(n for n, c in CATEGORIES.items() if c.answer_form == "binary")
PRESENCE_BY_SEMANTIC = {c.semantic: n for n, c in CATEGORIES.items() if c.kind == "presence"}
