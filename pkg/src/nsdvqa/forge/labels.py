"""Vocabulary unification by embedding similarity."""

from __future__ import annotations

import json
from dataclasses import replace
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_fraction, check_unit_rows
from ..annotations.parse import aggregate_objects, iter_lines
from ..annotations.schema import ImageAnnotation, Interaction


class LabelMap(dict):
    """raw label -> canonical label; labels it has never seen map to themselves."""

    def apply(self, label: str) -> str:
        return self.get(label, label)

    def is_idempotent(self) -> bool:
        return all(self.apply(c) == c for c in self.values())


class LabelMerger(TransformerMixin, BaseEstimator):
    """Group labels by single linkage over cosine similarity ≥ ``threshold``.

    Each group is represented by its most frequent member, ties broken by the
    lexicographically smallest label.

    Parameters
    ----------
    threshold : float, default=0.90
        Cosine similarity at or above which two labels are linked.
    """

    def __init__(self, threshold: float = 0.90):
        self.threshold = threshold

    def fit(self, labels: Sequence[str], embeddings, frequencies: Optional[Sequence[int]] = None):
        check_fraction(self.threshold, "threshold")
        labels = list(labels)
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be unique")
        E = check_unit_rows(embeddings, n_rows=len(labels))
        freqs = np.ones(len(labels)) if frequencies is None else np.asarray(frequencies, float)
        if len(labels) == 0:
            self.mapping_ = LabelMap()
            self.n_groups_ = 0
            return self
        sim = E @ E.T
        adj = csr_matrix(sim >= self.threshold - 1e-12)
        self.n_groups_, group = connected_components(adj, directed=False)
        mapping = LabelMap()
        for g in range(self.n_groups_):
            members = [i for i in range(len(labels)) if group[i] == g]
            head = min(members, key=lambda i: (-freqs[i], labels[i]))
            for i in members:
                mapping[labels[i]] = labels[head]
        self.mapping_ = LabelMap(sorted(mapping.items()))
        return self

    def transform(self, labels):
        check_is_fitted(self, "mapping_")
        return [self.mapping_.apply(lbl) for lbl in labels]


def merge_labels(vocab: Mapping[str, int], embeddings: Mapping[str, Sequence[float]],
                 threshold: float = 0.90) -> LabelMap:
    """Label map for ``vocab`` (label -> frequency) given one unit vector per label."""
    labels = sorted(vocab)
    missing = [lbl for lbl in labels if lbl not in embeddings]
    if missing:
        raise KeyError(f"missing embedding for labels: {missing}")
    E = np.array([embeddings[lbl] for lbl in labels], dtype=float).reshape(len(labels), -1)
    merger = LabelMerger(threshold=threshold).fit(labels, E, [vocab[lbl] for lbl in labels])
    return merger.mapping_


def apply_label_map(a: ImageAnnotation, label_map: LabelMap) -> ImageAnnotation:
    objects = aggregate_objects(replace(o, label=label_map.apply(o.label)) for o in a.objects)
    persons = tuple(
        replace(p, interaction=Interaction(p.interaction.verb, label_map.apply(p.interaction.object)))
        if p.interaction is not None else p
        for p in a.persons
    )
    return replace(a, objects=objects, persons=persons)


def read_embeddings(path) -> dict[str, list[float]]:
    """Line-delimited ``{"label": ..., "vector": [...]}``; vectors are re-normalized to unit length."""
    out = {}
    for line in iter_lines(path):
        if not line.strip():
            continue
        d = json.loads(line)
        v = np.asarray(d["vector"], dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError(f"zero embedding for label {d['label']!r}")
        out[d["label"]] = (v / norm).tolist()
    return out
