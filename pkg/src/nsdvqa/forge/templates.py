"""Editable question templates: category -> list of surface forms with slots."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Optional

import yaml

from .categories import CATEGORIES

SLOTS = frozenset({"label", "labels"})
_SLOT_RE = re.compile(r"<([a-z_]+)>")
_IRREGULAR = {"person": "people", "man": "men", "woman": "women", "child": "children",
              "mouse": "mice", "sheep": "sheep", "fish": "fish", "deer": "deer", "foot": "feet"}


class TemplateError(ValueError):
    pass


def pluralize(label: str) -> str:
    head, _, last = label.rpartition(" ")
    if last in _IRREGULAR:
        plural = _IRREGULAR[last]
    elif re.search(r"(s|x|z|ch|sh)$", last):
        plural = last + "es"
    elif re.search(r"[^aeiou]y$", last):
        plural = last[:-1] + "ies"
    else:
        plural = last + "s"
    return f"{head} {plural}" if head else plural


@dataclass(frozen=True)
class TemplateSet:
    surfaces: Mapping[str, tuple[str, ...]]

    def __post_init__(self):
        for category, forms in self.surfaces.items():
            if not forms:
                raise TemplateError(f"category {category!r} has no surface forms")
            for form in forms:
                unknown = set(_SLOT_RE.findall(form)) - SLOTS
                if unknown:
                    raise TemplateError(f"template {form!r} references unknown slot(s) {sorted(unknown)}")

    @classmethod
    def from_mapping(cls, data: Mapping) -> "TemplateSet":
        unknown = set(data) - set(CATEGORIES)
        if unknown:
            raise TemplateError(f"templates for unknown categories: {sorted(unknown)}")
        surfaces = {}
        for category, forms in data.items():
            if isinstance(forms, str):
                forms = [forms]
            surfaces[category] = tuple(str(f) for f in forms)
        return cls(surfaces)

    @classmethod
    def load(cls, path: Optional[str] = None) -> "TemplateSet":
        if path is None:
            text = resources.files("nsdvqa.data").joinpath("templates.yaml").read_text("utf-8")
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        return cls.from_mapping(yaml.safe_load(text) or {})

    def render(self, category: str, rng, label: Optional[str] = None) -> Optional[str]:
        """Fill one surface form of ``category``; None when the category has no templates."""
        forms = self.surfaces.get(category)
        if not forms:
            return None
        form = forms[int(rng.integers(len(forms)))] if len(forms) > 1 else forms[0]
        needed = set(_SLOT_RE.findall(form))
        if needed and label is None:
            raise TemplateError(f"template {form!r} needs a label but none is bound")
        values = {"label": label, "labels": pluralize(label) if label else None}
        return _SLOT_RE.sub(lambda m: values[m.group(1)], form)


def default_templates() -> TemplateSet:
    return TemplateSet.load()
