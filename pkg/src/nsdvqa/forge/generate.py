"""Grounded template instantiation and targeted negatives."""

from __future__ import annotations

import logging
from collections import Counter
from typing import Mapping, Optional, Sequence

import numpy as np

from ..annotations.schema import ImageAnnotation
from .categories import CATEGORIES, PRESENCE_BY_SEMANTIC
from .dataset import QAPair
from .templates import TemplateSet

logger = logging.getLogger(__name__)


def question_id(image_id: str, category: str, target: Optional[str]) -> str:
    cat = category.replace(" Y/N", "-yn").replace(" ", "-")
    tgt = target.replace(" ", "_") if target else "-"
    return f"{image_id}/{cat}/{tgt}"


def _single_person(a: ImageAnnotation):
    return a.persons[0] if len(a.persons) == 1 else None


def answer_for(category: str, target: Optional[str], a: ImageAnnotation) -> Optional[str]:
    """The answer ``a`` implies for (category, target), or None if the question does not apply.

    This is the single source of truth for template conditions: generation
    emits exactly the (category, target) pairs for which this returns a value,
    and the groundedness check re-evaluates it.
    """
    spec = CATEGORIES[category]
    kind = spec.kind
    labels = {o.label: o for o in a.objects if o.count > 0}
    if kind == "presence":
        if target is None:
            return None
        obj = labels.get(target)
        if obj is None:
            return "no"
        return "yes" if obj.semantic_category == spec.semantic else None
    if kind == "person":
        return "yes" if a.persons else "no"
    if kind == "open_class":
        of_class = sorted(lbl for lbl, o in labels.items() if o.semantic_category == spec.semantic)
        return of_class[0] if len(of_class) == 1 and target is None else None
    if kind == "counting":
        if target is None:
            return None
        obj = labels.get(target)
        return str(obj.count) if obj is not None else "0"
    if kind == "color":
        obj = labels.get(target) if target else None
        return obj.color if obj is not None else None
    if kind == "position":
        obj = labels.get(target) if target else None
        if obj is None or obj.position not in ("foreground", "background"):
            return None
        return obj.position
    if kind == "scene":
        return a.scene.setting if a.scene is not None and target is None else None
    if kind == "location":
        return a.scene.location if a.scene is not None and target is None else None
    person = _single_person(a)
    if person is None or target is not None:
        return None
    if kind == "action":
        return person.action
    if kind == "pose":
        return person.pose
    if kind == "holding":
        inter = person.interaction
        if inter is not None and inter.verb == "holding" and inter.object in labels:
            return inter.object
        return None
    raise ValueError(f"unhandled category kind {kind!r}")


def _slots(a: ImageAnnotation):
    """Every (category, target) worth asking about for this annotation."""
    for obj in a.objects:
        if obj.count <= 0:
            continue
        presence = PRESENCE_BY_SEMANTIC.get(obj.semantic_category)
        if presence is not None:
            yield presence, obj.label
        for category in ("counting", "color", "position"):
            yield category, obj.label
    for category in ("person Y/N", "animal", "food", "vehicle", "scene", "location",
                     "action", "holding", "pose"):
        yield category, None


def generate_qa(a: ImageAnnotation, templates: TemplateSet, rng) -> list[QAPair]:
    """Instantiate every applicable template for one verified, label-mapped annotation.

    ``person Y/N`` is only emitted positively here; absent-person questions
    come from :func:`generate_negatives`.
    """
    pairs, seen_questions = [], set()
    for category, target in _slots(a):
        answer = answer_for(category, target, a)
        if answer is None or (category == "person Y/N" and answer == "no"):
            continue
        question = templates.render(category, rng, target)
        if question is None or question in seen_questions:
            continue
        seen_questions.add(question)
        pairs.append(
            QAPair(
                question_id=question_id(a.image_id, category, target),
                image_id=a.image_id,
                category=category,
                question=question,
                answer=answer,
                answer_form=CATEGORIES[category].answer_form,
                is_negative=False,
                target=target,
            )
        )
    return pairs


def build_vocabulary(annotations: Sequence[ImageAnnotation]) -> dict[str, tuple[int, str]]:
    """label -> (number of images containing it, majority semantic category)."""
    freq: Counter = Counter()
    sems: dict[str, Counter] = {}
    for a in annotations:
        for o in a.objects:
            if o.count > 0:
                freq[o.label] += 1
                sems.setdefault(o.label, Counter())[o.semantic_category] += 1
    vocab = {}
    for label in sorted(freq):
        sem = min(sems[label].items(), key=lambda kv: (-kv[1], kv[0]))[0]
        vocab[label] = (freq[label], sem)
    return vocab


def negative_target_count(n_pos: int, ratio: float) -> int:
    """Negatives needed so they form ``ratio`` of the category: n_pos·ratio/(1−ratio)."""
    if ratio == 0:
        return 0
    return int(round(n_pos * ratio / (1.0 - ratio)))


def _weighted_labels(vocab, semantic=None):
    items = [(lbl, f) for lbl, (f, sem) in vocab.items() if semantic is None or sem == semantic]
    if not items:
        return [], np.array([])
    labels = [lbl for lbl, _ in items]
    w = np.array([f for _, f in items], dtype=float)
    return labels, w / w.sum()


def generate_negatives(
    dataset: Sequence[QAPair],
    annotations: Mapping[str, ImageAnnotation],
    vocab: Mapping[str, tuple[int, str]],
    rng,
    ratio: float = 0.5,
    templates: Optional[TemplateSet] = None,
    max_tries: int = 50,
) -> list[QAPair]:
    """Add absent-label questions so negatives reach ``ratio`` of each presence/counting category.

    Labels are drawn frequency-weighted from ``vocab`` (restricted to the
    category's semantic class for presence questions), images uniformly from
    ``annotations``.  Returns the input pairs plus the new negatives.
    """
    if not 0 <= ratio < 1:
        raise ValueError(f"negative ratio must lie in [0, 1), got {ratio}")
    pairs = list(dataset)
    if ratio == 0:
        return pairs
    templates = templates or TemplateSet.load()
    image_ids = sorted(annotations)
    taken = {p.question_id for p in pairs}
    positives = Counter(p.category for p in pairs if not p.is_negative)
    added = []

    def emit(category, image_id, target, answer):
        qid = question_id(image_id, category, target)
        if qid in taken:
            return False
        q = templates.render(category, rng, target)
        if q is None:
            return False
        taken.add(qid)
        added.append(QAPair(qid, image_id, category, q, answer,
                            CATEGORIES[category].answer_form, True, target))
        return True

    for category in sorted(CATEGORIES):
        spec = CATEGORIES[category]
        if spec.kind not in ("presence", "counting", "person"):
            continue
        need = negative_target_count(positives.get(category, 0), ratio)
        if need == 0 or not image_ids:
            continue
        if spec.kind == "person":
            pool = [i for i in image_ids if not annotations[i].persons]
            order = rng.permutation(len(pool))
            made = sum(emit(category, pool[j], None, "no") for j in order[:need])
        else:
            labels, weights = _weighted_labels(vocab, spec.semantic)
            if not labels:
                continue
            made, tries = 0, 0
            while made < need and tries < need * max_tries:
                tries += 1
                image_id = image_ids[int(rng.integers(len(image_ids)))]
                label = labels[int(rng.choice(len(labels), p=weights))]
                if label in annotations[image_id].labels:
                    continue
                answer = "no" if spec.kind == "presence" else "0"
                made += emit(category, image_id, label, answer)
        if made < need:
            logger.info("%s: produced %d of %d requested negatives", category, made, need)
    return pairs + added
