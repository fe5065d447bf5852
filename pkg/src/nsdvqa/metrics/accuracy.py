from __future__ import annotations

from typing import Sequence

from .normalize import normalize_answer


def exact_match_accuracy(pred: str, gold: str) -> int:
    return int(normalize_answer(pred) == normalize_answer(gold))


def vqa_consensus_accuracy(pred: str, human_answers: Sequence[str]) -> float:
    """Consensus accuracy against ten human answers.

    Averages ``min(matches / 3, 1)`` over the ten leave-one-out subsets of
    nine answers. With m matches overall, the m subsets that drop a match see
    m − 1 of them, the other 10 − m see m.
    """
    if len(human_answers) != 10:
        raise ValueError(f"consensus accuracy needs exactly 10 human answers, got {len(human_answers)}")
    target = normalize_answer(pred)
    m = sum(normalize_answer(h) == target for h in human_answers)
    return (m * min((m - 1) / 3, 1.0) + (10 - m) * min(m / 3, 1.0)) / 10
