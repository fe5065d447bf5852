"""Scoring a prediction run against a QA dataset."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..annotations.parse import iter_lines
from ..forge.dataset import QAPair
from .accuracy import exact_match_accuracy, vqa_consensus_accuracy
from .meteor import meteor_lite
from .ngram import bleu, cider, rouge_l

logger = logging.getLogger(__name__)

TEXT_METRICS = ("bleu", "rouge_l", "meteor", "cider")
ALL_METRICS = ("accuracy", "vqa") + TEXT_METRICS
DEFAULT_METRICS = ("accuracy",)


class RunError(ValueError):
    pass


@dataclass
class PredictionRun:
    run_id: str
    subject_id: Optional[str]
    records: dict[str, str]

    @classmethod
    def read(cls, path, run_id: Optional[str] = None, subject_id: Optional[str] = None) -> "PredictionRun":
        """Read ``{question_id, prediction}`` lines.

        A line without ``question_id`` is metadata and may set ``run_id`` and
        ``subject_id``; explicit arguments win over it.
        """
        meta, records = {}, {}
        for line_no, line in enumerate(iter_lines(path), 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RunError(f"line {line_no}: {exc}") from exc
            if "question_id" not in d:
                meta.update(d)
                continue
            qid = str(d["question_id"])
            if qid in records:
                raise RunError(f"line {line_no}: second prediction for {qid}")
            records[qid] = str(d.get("prediction", ""))
        subject = subject_id if subject_id is not None else meta.get("subject_id")
        return cls(
            run_id=run_id or str(meta.get("run_id", "run")),
            subject_id=None if subject is None else str(subject),
            records=records,
        )

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"run_id": self.run_id, "subject_id": self.subject_id}) + "\n")
            for qid in sorted(self.records):
                fh.write(json.dumps({"question_id": qid, "prediction": self.records[qid]},
                                    ensure_ascii=False) + "\n")


@dataclass
class EvalReport:
    run_id: str
    subject_id: Optional[str]
    overall: dict[str, float]
    per_category: dict[str, dict[str, float]]
    records: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "subject_id": self.subject_id,
            "overall": self.overall,
            "per_category": self.per_category,
            "records": self.records,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "EvalReport":
        return cls(d["run_id"], d.get("subject_id"), dict(d["overall"]),
                   {k: dict(v) for k, v in d["per_category"].items()}, list(d.get("records", [])))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, ensure_ascii=False)

    @classmethod
    def load(cls, path) -> "EvalReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def record_scores(self, metric: str = "accuracy") -> dict[str, float]:
        return {r["question_id"]: r[metric] for r in self.records}


def _text_scores(metrics, hyps, refs) -> dict[str, float]:
    out = {}
    if "bleu" in metrics:
        for n, s in enumerate(bleu(hyps, refs), 1):
            out[f"bleu_{n}"] = 100.0 * s
    if "rouge_l" in metrics:
        out["rouge_l"] = 100.0 * rouge_l(hyps, refs)
    if "meteor" in metrics:
        out["meteor"] = 100.0 * meteor_lite(hyps, refs)
    if "cider" in metrics:
        out["cider"] = cider(hyps, refs)
    return out


def evaluate_run(
    run: PredictionRun,
    dataset: Sequence[QAPair],
    metrics: Sequence[str] = DEFAULT_METRICS,
    human_answers: Optional[Mapping[str, Sequence[str]]] = None,
    jobs: int = 1,
) -> EvalReport:
    """Score ``run`` over every pair of ``dataset``.

    Missing predictions score 0 and are flagged ``missing``. Accuracy is
    reported micro (``accuracy``, mean over records) and macro
    (``accuracy_macro``, mean of per-category accuracies). BLEU, ROUGE-L and
    METEOR are on the ×100 scale; CIDEr keeps its own ×10 scale.
    """
    metrics = tuple(metrics)
    unknown = set(metrics) - set(ALL_METRICS)
    if unknown:
        raise RunError(f"unknown metrics {sorted(unknown)}; choose from {ALL_METRICS}")
    index = {p.question_id: p for p in dataset}
    stray = sorted(set(run.records) - set(index))
    if stray:
        raise RunError(f"{len(stray)} predictions for questions not in the dataset, e.g. {stray[:3]}")
    if "vqa" in metrics and human_answers is None:
        raise RunError("metric 'vqa' needs ten human answers per question")

    records = []
    for p in sorted(dataset, key=lambda q: q.question_id):
        pred = run.records.get(p.question_id)
        rec = {
            "question_id": p.question_id,
            "category": p.category,
            "gold": p.answer,
            "prediction": pred if pred is not None else "",
            "missing": pred is None,
            "accuracy": 0 if pred is None else exact_match_accuracy(pred, p.answer),
        }
        if "vqa" in metrics:
            rec["vqa"] = 0.0 if pred is None else vqa_consensus_accuracy(pred, human_answers[p.question_id])
        records.append(rec)
    n_missing = sum(r["missing"] for r in records)
    if n_missing:
        logger.warning("%s: %d of %d questions have no prediction (scored 0)",
                       run.run_id, n_missing, len(records))

    groups: dict[str, list[dict]] = {}
    for r in records:
        groups.setdefault(r["category"], []).append(r)
    text = [m for m in metrics if m in TEXT_METRICS]

    def summarize(rs):
        out = {"n": len(rs), "missing": sum(r["missing"] for r in rs)}
        if "accuracy" in metrics:
            out["accuracy"] = float(np.mean([r["accuracy"] for r in rs]))
        if "vqa" in metrics:
            out["vqa"] = float(np.mean([r["vqa"] for r in rs]))
        if text:
            out.update(_text_scores(text, [r["prediction"] for r in rs], [r["gold"] for r in rs]))
        return out

    cats = sorted(groups)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(summarize, [groups[c] for c in cats]))
    else:
        summaries = [summarize(groups[c]) for c in cats]
    per_category = dict(zip(cats, summaries))
    overall = summarize(records) if records else {"n": 0, "missing": 0}
    if "accuracy" in metrics and per_category:
        overall["accuracy_macro"] = float(np.mean([s["accuracy"] for s in per_category.values()]))
    return EvalReport(run.run_id, run.subject_id, overall, per_category, records)
