"""Corpus BLEU, ROUGE-L and plain CIDEr.

Hypotheses and references are strings (tokenized with
:func:`~nsdvqa.metrics.normalize.tokenize`) or token tuples. A reference
entry that is a list holds several references for the same hypothesis.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

import numpy as np

from .normalize import tokenize


def _as_refs(ref) -> list[tuple[str, ...]]:
    """str or tuple -> one reference; list -> several references."""
    if isinstance(ref, (str, tuple)):
        return [tokenize(ref)]
    return [tokenize(r) for r in ref]


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _prepare(hypotheses, references):
    if len(hypotheses) != len(references):
        raise ValueError("hypotheses and references must have equal length")
    if len(hypotheses) == 0:
        raise ValueError("empty corpus")
    return [tokenize(h) for h in hypotheses], [_as_refs(r) for r in references]


def bleu(hypotheses, references, max_n: int = 4) -> list[float]:
    """Corpus BLEU-1..BLEU-``max_n`` in [0, 1], unsmoothed.

    Clipped n-gram counts are summed over the corpus before the precisions
    are taken; the brevity penalty uses the closest reference length per
    sentence (shorter on ties).
    """
    hyps, refs = _prepare(hypotheses, references)
    matched = np.zeros(max_n)
    total = np.zeros(max_n)
    c = r = 0
    for h, rs in zip(hyps, refs):
        c += len(h)
        r += min((abs(len(x) - len(h)), len(x)) for x in rs)[1]
        for n in range(1, max_n + 1):
            hc = ngrams(h, n)
            max_ref: Counter = Counter()
            for x in rs:
                max_ref |= ngrams(x, n)
            matched[n - 1] += sum(min(k, max_ref[g]) for g, k in hc.items())
            total[n - 1] += sum(hc.values())
    if c == 0:
        return [0.0] * max_n
    bp = 1.0 if c > r else math.exp(1 - r / c)
    scores, log_sum = [], 0.0
    for n in range(max_n):
        if matched[n] == 0:
            scores.extend([0.0] * (max_n - n))
            break
        log_sum += math.log(matched[n] / total[n])
        scores.append(bp * math.exp(log_sum / (n + 1)))
    return scores


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l_sentence(hypothesis, references, beta: float = 1.2) -> float:
    h = tokenize(hypothesis)
    best = 0.0
    for ref in _as_refs(references):
        lcs = lcs_length(h, ref)
        if lcs == 0:
            continue
        p, rec = lcs / len(h), lcs / len(ref)
        best = max(best, (1 + beta ** 2) * p * rec / (rec + beta ** 2 * p))
    return best


def rouge_l(hypotheses, references, beta: float = 1.2) -> float:
    """Mean sentence ROUGE-L F-measure; multi-reference takes the best reference."""
    hyps, _ = _prepare(hypotheses, references)
    return float(np.mean([rouge_l_sentence(h, r, beta) for h, r in zip(hyps, references)]))


def _tfidf(counts: Counter, df: Counter, log_n: float) -> dict:
    return {g: k * (log_n - math.log(max(1.0, df[g]))) for g, k in counts.items()}


def _cosine(u: dict, v: dict) -> float:
    nu = math.sqrt(sum(x * x for x in u.values()))
    nv = math.sqrt(sum(x * x for x in v.values()))
    if nu == 0 or nv == 0:
        return 0.0
    return sum(x * v.get(g, 0.0) for g, x in u.items()) / (nu * nv)


def cider_per_image(hypotheses, reference_sets, max_n: int = 4) -> list[float]:
    """Plain CIDEr per image on the ×10 scale.

    Document frequency of an n-gram is the number of images whose reference
    set contains it; idf = log(N_images / max(1, df)).
    """
    hyps, refs = _prepare(hypotheses, reference_sets)
    log_n = math.log(len(refs))
    df: Counter = Counter()
    for rs in refs:
        seen = set()
        for x in rs:
            for n in range(1, max_n + 1):
                seen.update(ngrams(x, n))
        df.update(seen)
    scores = []
    for h, rs in zip(hyps, refs):
        per_n = []
        for n in range(1, max_n + 1):
            vh = _tfidf(ngrams(h, n), df, log_n)
            per_n.append(np.mean([_cosine(vh, _tfidf(ngrams(x, n), df, log_n)) for x in rs]))
        scores.append(10.0 * float(np.mean(per_n)))
    return scores


def cider(hypotheses, reference_sets, max_n: int = 4) -> float:
    return float(np.mean(cider_per_image(hypotheses, reference_sets, max_n)))
