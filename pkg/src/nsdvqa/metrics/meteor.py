"""METEOR without the synonym stage.

Alignment runs an exact stage and then a stem stage over the still-unmatched
tokens. Within a stage each hypothesis token, left to right, takes the
reference position that extends the previous alignment if it can, otherwise
the leftmost free candidate. Further stages (e.g. a synonym table) can be
passed as extra key functions.
"""

from __future__ import annotations

import re
from typing import Callable, Sequence

import numpy as np

from .normalize import tokenize

_VOWEL = re.compile(r"[aeiouy]")
_STEP1 = (("sses", "ss"), ("ies", "i"), ("ss", "ss"), ("s", ""))
_STEP2 = (("ational", "ate"), ("tional", "tion"), ("iveness", "ive"), ("fulness", "ful"),
          ("ousness", "ous"), ("ization", "ize"), ("ation", "ate"), ("alism", "al"),
          ("ness", ""), ("ment", ""), ("ful", ""), ("ly", ""))


def stem(word: str) -> str:
    """Small Porter-style suffix stripper (plurals, -ed/-ing, common derivational suffixes)."""
    if len(word) <= 3:
        return word
    for suf, rep in _STEP1:
        if word.endswith(suf):
            word = word[: len(word) - len(suf)] + rep
            break
    for suf in ("eed", "ing", "ed"):
        if word.endswith(suf):
            base = word[: -len(suf)]
            if suf == "eed":
                word = base + "ee"
            elif _VOWEL.search(base):
                word = base
                if word.endswith(("at", "bl", "iz")):
                    word += "e"
                elif len(word) > 2 and word[-1] == word[-2] and word[-1] not in "lsz":
                    word = word[:-1]
            break
    if word.endswith("y") and _VOWEL.search(word[:-1]):
        word = word[:-1] + "i"
    for suf, rep in _STEP2:
        if word.endswith(suf) and len(word) - len(suf) >= 3:
            word = word[: len(word) - len(suf)] + rep
            break
    if word.endswith("e") and len(word) > 4:
        word = word[:-1]
    return word


def align(hyp: Sequence[str], ref: Sequence[str],
          stages: Sequence[Callable[[str], str]] = (lambda t: t, stem)) -> list[tuple[int, int]]:
    """Unigram alignment as sorted (hyp_index, ref_index) pairs."""
    h_free = set(range(len(hyp)))
    r_free = set(range(len(ref)))
    pairs: dict[int, int] = {}
    for key in stages:
        rkeys = [key(t) for t in ref]
        for i in range(len(hyp)):
            if i not in h_free:
                continue
            k = key(hyp[i])
            cands = [j for j in sorted(r_free) if rkeys[j] == k]
            if not cands:
                continue
            prev = pairs.get(i - 1)
            j = prev + 1 if prev is not None and prev + 1 in cands else cands[0]
            pairs[i] = j
            h_free.discard(i)
            r_free.discard(j)
    return sorted(pairs.items())


def count_chunks(alignment: Sequence[tuple[int, int]]) -> int:
    chunks, last = 0, None
    for i, j in alignment:
        if last is None or i != last[0] + 1 or j != last[1] + 1:
            chunks += 1
        last = (i, j)
    return chunks


def meteor_sentence(hypothesis, reference, alpha: float = 0.9, gamma: float = 0.5,
                    beta: float = 3.0) -> float:
    """F_mean = 10PR/(R+9P) times (1 − 0.5·(chunks/matches)^3); list references take the max."""
    if isinstance(reference, list):
        return max((meteor_sentence(hypothesis, r, alpha, gamma, beta) for r in reference),
                   default=0.0)
    h, r = tokenize(hypothesis), tokenize(reference)
    alignment = align(h, r)
    m = len(alignment)
    if m == 0:
        return 0.0
    p, rec = m / len(h), m / len(r)
    f_mean = p * rec / (alpha * p + (1 - alpha) * rec)
    penalty = gamma * (count_chunks(alignment) / m) ** beta
    return f_mean * (1 - penalty)


def meteor_lite(hypotheses, references) -> float:
    if isinstance(hypotheses, (str, tuple)):
        return meteor_sentence(hypotheses, references)
    if len(hypotheses) != len(references):
        raise ValueError("hypotheses and references must have equal length")
    if not hypotheses:
        return 0.0
    return float(np.mean([meteor_sentence(h, r) for h, r in zip(hypotheses, references)]))
