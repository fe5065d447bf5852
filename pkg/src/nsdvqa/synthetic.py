"""Seeded synthetic annotator outputs with NSD-like richness.

Produces paired annotator_a / annotator_b records (b disagrees on a
controlled share of object counts), raw labels that include near-synonyms,
and embeddings under which those synonyms sit close to their canonical label.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .annotations.schema import (
    ImageAnnotation,
    Interaction,
    ObjectEntry,
    PersonEntry,
    SceneEntry,
)

VOCAB = {
    "animal": ["dog", "cat", "horse", "cow", "sheep", "bird", "elephant", "giraffe", "zebra", "bear"],
    "vehicle": ["car", "bus", "truck", "bicycle", "motorcycle", "train", "boat", "airplane"],
    "food": ["pizza", "sandwich", "banana", "apple", "cake", "donut", "broccoli", "orange"],
    "appliance": ["refrigerator", "oven", "microwave", "toaster", "sink"],
    "electronic": ["computer", "television", "cell phone", "keyboard", "remote"],
    "clothing": ["hat", "shirt", "jacket", "tie", "backpack", "umbrella"],
    "household": ["chair", "couch", "bed", "table", "vase", "clock", "lamp", "cup", "bottle", "book"],
    "plant": ["tree", "potted plant", "flower", "grass", "bush"],
    "sport-equipment": ["surfboard", "skateboard", "tennis racket", "frisbee", "skis", "kite", "ball"],
    "structure": ["building", "bridge", "fence", "tower", "house"],
    "landscape-feature": ["mountain", "beach", "river", "sky", "road", "snow"],
    "other": ["sign", "traffic light", "bench", "pole"],
}
CATEGORY_WEIGHTS = {
    "animal": 1.2, "vehicle": 1.0, "food": 0.9, "appliance": 0.6, "electronic": 0.7,
    "clothing": 0.8, "household": 1.6, "plant": 0.9, "sport-equipment": 0.8,
    "structure": 0.8, "landscape-feature": 0.9, "other": 0.6,
}
SYNONYMS = {"computer": ["laptop", "notebook"], "couch": ["sofa"], "television": ["tv"],
            "cell phone": ["phone"], "bicycle": ["bike"]}
COLORS = ["white", "black", "red", "blue", "green", "brown", "gray", "yellow", "orange", "pink", "silver"]
LOCATIONS = {
    "indoor": ["kitchen", "living room", "bedroom", "office", "restaurant", "bathroom"],
    "outdoor": ["street", "beach", "park", "field", "city", "ski slope", "harbor"],
}
ACTIONS = ["surfing", "skiing", "walking", "riding", "eating", "playing tennis", "talking on phone",
           "cooking", "skateboarding", "reading", "flying a kite", "playing frisbee"]
POSES = ["standing", "sitting", "walking", "lying", "crouching"]
HOLDABLE = ("sport-equipment", "electronic", "food", "household", "clothing")


def _choice(rng, seq, p=None):
    return seq[int(rng.choice(len(seq), p=p))]


def _sample_objects(rng):
    cats = list(CATEGORY_WEIGHTS)
    w = np.array([CATEGORY_WEIGHTS[c] for c in cats])
    w = w / w.sum()
    n = int(min(8, 1 + rng.poisson(2.6)))
    objects, used = [], set()
    while len(objects) < n:
        cat = _choice(rng, cats, w)
        label = _choice(rng, VOCAB[cat])
        if label in used:
            continue
        used.add(label)
        count = int(_choice(rng, [1, 2, 3, 4, 5], [0.55, 0.25, 0.12, 0.05, 0.03]))
        color = _choice(rng, COLORS) if rng.random() < 0.75 else None
        position = _choice(rng, ["foreground", "background", "unknown"], [0.5, 0.4, 0.1])
        if label in SYNONYMS and rng.random() < 0.3:
            label = _choice(rng, SYNONYMS[label])
        objects.append(ObjectEntry(label, count, cat, color, position))
    return objects


def _sample_persons(rng, objects):
    if rng.random() >= 0.55:
        return []
    n = 1 if rng.random() < 0.7 else int(rng.integers(2, 4))
    persons = []
    holdable = [o.label for o in objects if o.semantic_category in HOLDABLE]
    for _ in range(n):
        action = _choice(rng, ACTIONS) if rng.random() < 0.85 else None
        pose = _choice(rng, POSES) if rng.random() < 0.85 else None
        interaction = None
        if holdable and rng.random() < 0.5:
            interaction = Interaction("holding", _choice(rng, holdable))
        persons.append(PersonEntry(action, interaction, pose))
    return persons


def synthetic_pair(rng, image_id: str, disagreement: float = 0.1):
    objects = _sample_objects(rng)
    persons = _sample_persons(rng, objects)
    setting = "indoor" if rng.random() < 0.4 else "outdoor"
    scene = SceneEntry(setting, _choice(rng, LOCATIONS[setting]))
    a = ImageAnnotation(image_id, tuple(objects), tuple(persons), scene, "annotator_a")
    b_objects = []
    for obj in objects:
        if rng.random() < disagreement:
            delta = int(_choice(rng, [-1, 1]))
            b_objects.append(replace(obj, count=max(0, obj.count + delta)))
        else:
            b_objects.append(obj)
    b = ImageAnnotation(image_id, tuple(b_objects), (), None, "annotator_b")
    return a, b


def synthetic_corpus(n_images: int = 600, seed: int = 0, disagreement: float = 0.1):
    """Return (annotations_a, annotations_b), both sorted by image_id."""
    rng = np.random.default_rng(seed)
    pairs = [synthetic_pair(rng, f"img{i:05d}", disagreement) for i in range(n_images)]
    return [a for a, _ in pairs], [b for _, b in pairs]


def synthetic_embeddings(seed: int = 0, dim: int = 64) -> dict[str, list[float]]:
    """Unit vectors per label; synonyms sit at cosine ≈ 0.97 from their canonical label."""
    rng = np.random.default_rng(seed)
    out = {}
    labels = sorted({lbl for v in VOCAB.values() for lbl in v})
    for label in labels:
        v = rng.normal(size=dim)
        out[label] = v / np.linalg.norm(v)
    for head, syns in sorted(SYNONYMS.items()):
        for s in syns:
            noise = rng.normal(size=dim)
            noise -= noise.dot(out[head]) * out[head]
            noise /= np.linalg.norm(noise)
            v = out[head] + 0.25 * noise
            out[s] = v / np.linalg.norm(v)
    return {k: out[k].tolist() for k in sorted(out)}
