"""Cross-subject aggregation and bootstrap tests over question-level scores."""

from __future__ import annotations

from typing import Mapping, Sequence, Union

import numpy as np

SeedLike = Union[int, np.random.Generator, None]
BLOCK = 1000  # bootstrap replicates per RNG stream


def aggregate_subjects(scores: Mapping[str, Union[float, Sequence[float]]]):
    """Mean and sample (n−1) standard deviation across subjects.

    Values may be scalars or equal-length vectors (e.g. per-category scores);
    the std is None for a single subject.
    """
    if not scores:
        raise ValueError("no subjects to aggregate")
    values = np.array([np.asarray(scores[k], dtype=float) for k in sorted(scores)])
    if not np.isfinite(values).all():
        raise ValueError("subject scores must be finite")
    mean = values.mean(axis=0)
    std = values.std(axis=0, ddof=1) if len(values) > 1 else None
    if mean.ndim == 0:
        return float(mean), (None if std is None else float(std))
    return mean, std


def _master_seed(rng: SeedLike) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(2**63))
    return 0 if rng is None else int(rng)


def _bootstrap_sums(values: np.ndarray, n_boot: int, seed: int) -> np.ndarray:
    """Sums of ``n_boot`` with-replacement resamples; replicate block b uses stream (seed, b)."""
    n = len(values)
    out = np.empty(n_boot)
    for b, start in enumerate(range(0, n_boot, BLOCK)):
        size = min(BLOCK, n_boot - start)
        idx = np.random.default_rng([seed, b]).integers(0, n, size=(size, n))
        out[start:start + size] = values[idx].sum(axis=1)
    return out


def paired_bootstrap(a: Sequence[float], b: Sequence[float], n_boot: int = 10_000,
                     rng: SeedLike = 0, alternative: str = "greater") -> float:
    """Paired bootstrap p-value that candidate ``a`` beats baseline ``b``.

    Question indices are resampled jointly. For ``alternative="greater"``
    p = (#{mean a* < mean b*} + ½·#{ties} + 1) / (n_boot + 1), so identical
    systems give p ≈ 0.5 and a uniformly better candidate gives the minimum
    1/(n_boot + 1). ``"two-sided"`` doubles the smaller one-sided p.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-D and of equal length")
    if len(a) == 0:
        raise ValueError("paired samples are empty")
    if alternative not in ("greater", "less", "two-sided"):
        raise ValueError(f"unknown alternative {alternative!r}")
    d = a - b
    sums = _bootstrap_sums(d, n_boot, _master_seed(rng))
    tol = 1e-9 * max(1.0, float(np.abs(d).max())) * len(d)
    below = int((sums < -tol).sum())
    above = int((sums > tol).sum())
    ties = n_boot - below - above
    p_greater = (below + 0.5 * ties + 1) / (n_boot + 1)
    p_less = (above + 0.5 * ties + 1) / (n_boot + 1)
    if alternative == "greater":
        return p_greater
    if alternative == "less":
        return p_less
    return min(1.0, 2 * min(p_greater, p_less))


def bootstrap_std(scores: Sequence[float], n_boot: int = 1000, rng: SeedLike = 0) -> float:
    """Standard deviation of the bootstrap distribution of the mean."""
    scores = np.asarray(scores, dtype=float)
    if scores.size < 2:
        raise ValueError("bootstrap_std needs at least 2 records")
    if n_boot < 100:
        raise ValueError("n_boot must be at least 100")
    means = _bootstrap_sums(scores, n_boot, _master_seed(rng)) / scores.size
    return float(means.std(ddof=1))

