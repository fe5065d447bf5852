"""Randomized cluster-masking campaigns against an external prediction provider.

Provider contract
-----------------
A provider answers the stimulus questions with a given inclusion mask.

Command provider: the executable is invoked as::

    <command...> --mask MASK_FILE --stimuli STIMULI_FILE --output OUTPUT_FILE

``MASK_FILE`` is one ASCII line of ``K`` characters ``0``/``1`` plus ``\\n``
(bit 1 = cluster included). ``STIMULI_FILE`` is UTF-8 JSON lines, one per
question, with keys ``question_id``, ``image_id``, ``question`` (sorted keys,
sorted by ``question_id``). The provider writes ``OUTPUT_FILE`` as JSON lines
``{"question_id": ..., "prediction": ...}`` and exits 0.

HTTP provider: ``POST <url>`` with body
``{"mask": "<0/1 string>", "stimuli": [{"question_id", "image_id", "question"}, ...]}``;
a 2xx response carries ``{"predictions": [{"question_id", "prediction"}, ...]}``.
"""

from __future__ import annotations

import json
import logging
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import httpx
import numpy as np

from ..forge.dataset import QAPair
from ..metrics.accuracy import exact_match_accuracy
from .ledger import MaskTrial, TrialLedger, mask_to_str, sample_mask

logger = logging.getLogger(__name__)

Provider = Callable[[np.ndarray, Sequence[QAPair]], Mapping[str, str]]


class ProviderError(RuntimeError):
    pass


def stimulus_records(questions: Sequence[QAPair]) -> list[dict]:
    return [{"image_id": q.image_id, "question": q.question, "question_id": q.question_id}
            for q in sorted(questions, key=lambda q: q.question_id)]


def _parse_predictions(rows) -> dict[str, str]:
    out = {}
    for row in rows:
        out[str(row["question_id"])] = str(row["prediction"])
    return out


class CommandProvider:
    def __init__(self, command: Sequence[str], timeout: Optional[float] = None):
        self.command = list(command)
        self.timeout = timeout

    def __call__(self, mask, questions):
        with tempfile.TemporaryDirectory(prefix="nsdvqa-provider-") as tmp:
            tmp = Path(tmp)
            mask_file, stim_file, out_file = tmp / "mask.txt", tmp / "stimuli.jsonl", tmp / "out.jsonl"
            mask_file.write_text(mask_to_str(mask) + "\n", encoding="ascii")
            with open(stim_file, "w", encoding="utf-8") as fh:
                for rec in stimulus_records(questions):
                    fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
            argv = self.command + ["--mask", str(mask_file), "--stimuli", str(stim_file),
                                   "--output", str(out_file)]
            try:
                proc = subprocess.run(argv, capture_output=True, text=True, timeout=self.timeout)
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise ProviderError(f"provider command failed: {exc}") from exc
            if proc.returncode != 0:
                raise ProviderError(f"provider exited {proc.returncode}: {proc.stderr.strip()[:500]}")
            try:
                with open(out_file, encoding="utf-8") as fh:
                    return _parse_predictions(json.loads(line) for line in fh if line.strip())
            except (OSError, ValueError, KeyError) as exc:
                raise ProviderError(f"unreadable provider output: {exc}") from exc


class HTTPProvider:
    def __init__(self, url: str, timeout: float = 300.0, transport: Optional[httpx.BaseTransport] = None):
        self.url = url
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def __call__(self, mask, questions):
        payload = {"mask": mask_to_str(mask), "stimuli": stimulus_records(questions)}
        try:
            resp = self._client.post(self.url, json=payload)
        except httpx.HTTPError as exc:
            raise ProviderError(f"provider request failed: {exc}") from exc
        if not 200 <= resp.status_code < 300:
            raise ProviderError(f"provider returned HTTP {resp.status_code}")
        try:
            return _parse_predictions(resp.json()["predictions"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderError(f"unreadable provider response: {exc}") from exc


def score_by_category(questions: Sequence[QAPair], predictions: Mapping[str, str],
                      categories: Sequence[str]) -> dict[str, Optional[float]]:
    hits: dict[str, list[int]] = {c: [] for c in categories}
    for q in questions:
        if q.category in hits:
            pred = predictions.get(q.question_id)
            hits[q.category].append(0 if pred is None else exact_match_accuracy(pred, q.answer))
    return {c: (float(np.mean(v)) if v else None) for c, v in hits.items()}


def run_masking_campaign(
    dataset: Sequence[QAPair],
    provider: Provider,
    n_clusters: int = 128,
    n_trials: int = 10_000,
    n_stimuli: int = 200,
    density: float = 0.5,
    seed: int = 0,
    fixed_subset: bool = False,
    jobs: int = 1,
    subject: Optional[str] = None,
) -> TrialLedger:
    """Sample masks and stimulus subsets, query ``provider``, score each trial per category.

    Trial ``t`` draws from its own generator seeded by ``(seed, t)``, so the
    ledger does not depend on ``jobs`` or completion order. Trials whose
    provider call fails are logged and dropped.
    """
    by_image: dict[str, list[QAPair]] = {}
    for q in sorted(dataset, key=lambda q: q.question_id):
        by_image.setdefault(q.image_id, []).append(q)
    images = sorted(by_image)
    if n_stimuli > len(images):
        raise ValueError(f"n_stimuli={n_stimuli} exceeds the {len(images)} images in the dataset")
    categories = sorted({q.category for q in dataset})
    shared = None
    if fixed_subset:
        pick = np.random.default_rng([seed, 2**32 - 1]).choice(len(images), n_stimuli, replace=False)
        shared = sorted(images[i] for i in pick)

    def one(trial_id: int):
        rng = np.random.default_rng([seed, trial_id])
        mask = sample_mask(rng, n_clusters, density)
        if shared is None:
            pick = rng.choice(len(images), n_stimuli, replace=False)
            subset = sorted(images[i] for i in pick)
        else:
            subset = shared
        questions = [q for img in subset for q in by_image[img]]
        try:
            predictions = provider(mask, questions)
        except ProviderError as exc:
            logger.warning("trial %d skipped: %s", trial_id, exc)
            return None
        return MaskTrial(trial_id, mask, score_by_category(questions, predictions, categories))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, range(n_trials)))
    else:
        results = [one(t) for t in range(n_trials)]
    trials = [t for t in results if t is not None]
    failed = [i for i, t in enumerate(results) if t is None]
    metadata = {
        "seed": seed,
        "density": density,
        "n_clusters": n_clusters,
        "n_stimuli": n_stimuli,
        "n_trials": n_trials,
        "n_attempted": n_trials,
        "n_completed": len(trials),
        "failed_trials": failed,
        "fixed_subset": fixed_subset,
        "subject": subject,
    }
    return TrialLedger(trials, metadata)
