"""QA pair records and the line-delimited dataset format."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

from ..annotations.parse import iter_lines
from .categories import CATEGORIES


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class QAPair:
    question_id: str
    image_id: str
    category: str
    question: str
    answer: str
    answer_form: str
    is_negative: bool = False
    target: Optional[str] = None  # object label the question is about, if any

    def to_dict(self) -> dict:
        return asdict(self)


def check_pair(p: QAPair) -> None:
    spec = CATEGORIES.get(p.category)
    if spec is not None and spec.answer_form != p.answer_form:
        raise DatasetError(f"{p.question_id}: {p.category} is a {spec.answer_form} category")
    if p.answer_form == "binary" and p.answer not in ("yes", "no"):
        raise DatasetError(f"{p.question_id}: binary answer must be yes/no, got {p.answer!r}")
    if p.answer_form not in ("open", "binary"):
        raise DatasetError(f"{p.question_id}: unknown answer_form {p.answer_form!r}")


def canonical_order(pairs: Iterable[QAPair]) -> list[QAPair]:
    return sorted(pairs, key=lambda p: (p.image_id, p.category, p.question_id))


def read_dataset(source) -> list[QAPair]:
    """Read QA pairs; unlike annotation parsing, any bad line is fatal."""
    pairs, seen = [], set()
    for line_no, line in enumerate(iter_lines(source), 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            pair = QAPair(
                question_id=str(d["question_id"]),
                image_id=str(d["image_id"]),
                category=d["category"],
                question=d["question"],
                answer=d["answer"],
                answer_form=d.get("answer_form") or CATEGORIES[d["category"]].answer_form,
                is_negative=bool(d.get("is_negative", False)),
                target=d.get("target"),
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DatasetError(f"line {line_no}: {exc!r}") from exc
        check_pair(pair)
        if pair.question_id in seen:
            raise DatasetError(f"line {line_no}: duplicate question_id {pair.question_id}")
        seen.add(pair.question_id)
        pairs.append(pair)
    return pairs


def dumps_pair(p: QAPair) -> str:
    return json.dumps(p.to_dict(), sort_keys=True, ensure_ascii=False)


def write_dataset(pairs: Iterable[QAPair], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(dumps_pair(p) + "\n")
