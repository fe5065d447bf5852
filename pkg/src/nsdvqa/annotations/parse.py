"""Line-delimited annotation parsing and invariant checks."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, Union

from .schema import (
    POSITIONS,
    SEMANTIC_CATEGORIES,
    SETTINGS,
    SOURCES,
    ImageAnnotation,
    Interaction,
    ObjectEntry,
    PersonEntry,
    SceneEntry,
    annotation_to_dict,
)


class SchemaError(ValueError):
    """A record does not follow the annotation wire schema."""


@dataclass(frozen=True)
class ValidationIssue:
    field: str
    rule: str
    severity: str = "error"  # "error" rejects the record, "warning" keeps it

    def __str__(self) -> str:
        return f"{self.field}: {self.rule}"


@dataclass(frozen=True)
class Reject:
    line_no: int
    reason: str


@dataclass
class ParseResult:
    annotations: list[ImageAnnotation]
    rejects: list[Reject]

    def __iter__(self):
        return iter(self.annotations)

    def __len__(self) -> int:
        return len(self.annotations)


def _token(value, what: str, optional: bool = True):
    if value is None:
        if optional:
            return None
        raise SchemaError(f"{what} is required")
    if not isinstance(value, str):
        raise SchemaError(f"{what} must be a string")
    value = " ".join(value.strip().lower().split())
    if not value:
        if optional:
            return None
        raise SchemaError(f"{what} must be non-empty")
    return value


def _object_from_dict(d) -> ObjectEntry:
    if not isinstance(d, dict):
        raise SchemaError("object entry must be a mapping")
    count = d.get("count")
    if isinstance(count, bool) or not isinstance(count, int):
        raise SchemaError("objects.count must be an integer")
    category = _token(d.get("semantic_category"), "objects.semantic_category") or "other"
    if category not in SEMANTIC_CATEGORIES:
        category = "other"
    position = _token(d.get("position"), "objects.position") or "unknown"
    return ObjectEntry(
        label=_token(d.get("label"), "objects.label", optional=False),
        count=count,
        semantic_category=category,
        color=_token(d.get("color"), "objects.color"),
        position=position,
    )


def _person_from_dict(d) -> PersonEntry:
    if not isinstance(d, dict):
        raise SchemaError("person entry must be a mapping")
    interaction = d.get("interaction")
    if interaction is not None:
        if not isinstance(interaction, dict):
            raise SchemaError("persons.interaction must be a mapping")
        interaction = Interaction(
            verb=_token(interaction.get("verb"), "persons.interaction.verb", optional=False),
            object=_token(interaction.get("object"), "persons.interaction.object", optional=False),
        )
    return PersonEntry(
        action=_token(d.get("action"), "persons.action"),
        interaction=interaction,
        pose=_token(d.get("pose"), "persons.pose"),
    )


def aggregate_objects(objects: Iterable[ObjectEntry]) -> tuple[ObjectEntry, ...]:
    """Merge entries sharing a label: counts add, first non-empty attribute wins."""
    merged: dict[str, ObjectEntry] = {}
    for obj in objects:
        prev = merged.get(obj.label)
        if prev is None:
            merged[obj.label] = obj
            continue
        merged[obj.label] = ObjectEntry(
            label=obj.label,
            count=prev.count + obj.count,
            semantic_category=prev.semantic_category,
            color=prev.color if prev.color is not None else obj.color,
            position=prev.position if prev.position != "unknown" else obj.position,
        )
    return tuple(merged.values())


def annotation_from_dict(d) -> ImageAnnotation:
    """Build an annotation from a decoded record, raising SchemaError on shape errors."""
    if not isinstance(d, dict):
        raise SchemaError("record must be a mapping")
    unknown = set(d) - {"image_id", "source", "objects", "persons", "scene"}
    if unknown:
        raise SchemaError(f"unknown keys: {sorted(unknown)}")
    image_id = d.get("image_id")
    if not isinstance(image_id, str) or not image_id:
        raise SchemaError("image_id must be a non-empty string")
    source = d.get("source", "annotator_a")
    objects = d.get("objects", [])
    persons = d.get("persons", [])
    if not isinstance(objects, list) or not isinstance(persons, list):
        raise SchemaError("objects and persons must be lists")
    scene = d.get("scene")
    if scene is not None:
        if not isinstance(scene, dict) or "setting" not in scene:
            raise SchemaError("scene must be a mapping with a setting")
        scene = SceneEntry(
            setting=_token(scene.get("setting"), "scene.setting", optional=False),
            location=_token(scene.get("location"), "scene.location"),
        )
    return ImageAnnotation(
        image_id=image_id,
        objects=aggregate_objects(_object_from_dict(o) for o in objects),
        persons=tuple(_person_from_dict(p) for p in persons),
        scene=scene,
        source=source,
    )


def validate_annotation(a: ImageAnnotation) -> list[ValidationIssue]:
    """Return every violated invariant of ``a``; empty when the record is valid."""
    issues = []
    if not a.image_id:
        issues.append(ValidationIssue("image_id", "image_id non-empty"))
    if a.source not in SOURCES:
        issues.append(ValidationIssue("source", f"source in {SOURCES}"))
    seen = set()
    for i, obj in enumerate(a.objects):
        where = f"objects[{i}]"
        if not obj.label:
            issues.append(ValidationIssue(f"{where}.label", "label non-empty"))
        if obj.label in seen:
            issues.append(ValidationIssue(f"{where}.label", "labels unique within annotation"))
        seen.add(obj.label)
        if obj.count < 0:
            issues.append(ValidationIssue(f"{where}.count", "count ≥ 0"))
        if obj.position not in POSITIONS:
            issues.append(ValidationIssue(f"{where}.position", f"position in {POSITIONS}"))
        if obj.semantic_category not in SEMANTIC_CATEGORIES:
            issues.append(
                ValidationIssue(f"{where}.semantic_category", "semantic_category in vocabulary")
            )
    for i, person in enumerate(a.persons):
        if person.interaction is not None and person.interaction.object not in seen:
            issues.append(
                ValidationIssue(
                    f"persons[{i}].interaction.object",
                    "unresolved interaction target",
                    severity="warning",
                )
            )
    if a.scene is not None:
        if a.scene.setting not in SETTINGS:
            issues.append(ValidationIssue("scene.setting", f"setting in {SETTINGS}"))
        if a.scene.location is not None and not a.scene.location:
            issues.append(ValidationIssue("scene.location", "location non-empty when present"))
    return issues


def iter_lines(source: Union[str, Path, IO[str], Iterable[str]]) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            yield from fh
    else:
        yield from source


def parse_annotations(source) -> ParseResult:
    """Parse line-delimited annotation records.

    Blank lines are skipped. Lines that fail to decode, break the schema, carry
    an error-level invariant violation, or repeat an ``image_id`` are reported in
    ``rejects`` with their 1-based line number; they never reach ``annotations``.
    """
    annotations, rejects = [], []
    seen_ids = set()
    for line_no, line in enumerate(iter_lines(source), 1):
        if not line.strip():
            continue
        try:
            a = annotation_from_dict(json.loads(line))
        except (json.JSONDecodeError, SchemaError) as exc:
            rejects.append(Reject(line_no, str(exc)))
            continue
        errors = [str(i) for i in validate_annotation(a) if i.severity == "error"]
        if a.image_id in seen_ids:
            errors.append("image_id: unique within collection")
        if errors:
            rejects.append(Reject(line_no, "; ".join(errors)))
            continue
        seen_ids.add(a.image_id)
        annotations.append(a)
    return ParseResult(annotations, rejects)


def dumps_annotation(a: ImageAnnotation) -> str:
    return json.dumps(annotation_to_dict(a), sort_keys=True, ensure_ascii=False)


def write_annotations(annotations: Iterable[ImageAnnotation], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in annotations:
            fh.write(dumps_annotation(a) + "\n")
