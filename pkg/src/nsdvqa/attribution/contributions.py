"""Per-category contribution maps and their voxelwise export."""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .ledger import TrialLedger, assemble_design
from .ridge import ridge_fit


@dataclass
class ContributionMap:
    categories: list[str]
    coef: np.ndarray  # (n_categories, n_clusters)
    intercept: np.ndarray  # (n_categories,)
    lam: float
    n_rows: np.ndarray  # trials used per category

    def __post_init__(self):
        if not np.isfinite(self.coef).all() or not np.isfinite(self.intercept).all():
            raise ValueError("contribution map has non-finite values")

    @property
    def n_clusters(self) -> int:
        return self.coef.shape[1]

    def for_category(self, category: str) -> np.ndarray:
        return self.coef[self.categories.index(category)]


def contribution_map(ledger: TrialLedger, lam: float = 1.0) -> ContributionMap:
    """One ridge fit per category over the shared mask design.

    Trials where a category has no score are left out of that category's fit.
    Positive coefficients mean including the cluster raises accuracy.
    """
    X, Y, cats = assemble_design(ledger)
    coefs, intercepts, rows = [], [], []
    for c in range(Y.shape[1]):
        ok = np.isfinite(Y[:, c])
        beta, b0 = ridge_fit(X[ok], Y[ok, c], lam)
        coefs.append(beta)
        intercepts.append(b0)
        rows.append(int(ok.sum()))
    return ContributionMap(cats, np.array(coefs), np.array(intercepts), float(lam), np.array(rows))


def _slug(category: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", category.lower().replace("y/n", "yn")).strip("_")


def read_cluster_table(path) -> dict[int, list[str]]:
    """JSON object ``{"<cluster_id>": [voxel_id, ...]}``."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return {int(k): [str(v) for v in vs] for k, vs in raw.items()}


def export_contributions(cmap: ContributionMap, cluster_table: Mapping[int, Sequence], out_dir) -> list[Path]:
    """Write per-category cluster and voxel tables as tab-separated files.

    ``<slug>.clusters.tsv`` holds ``cluster_id  coefficient``;
    ``<slug>.voxels.tsv`` holds ``voxel_id  cluster_id  value`` where every
    voxel carries its cluster's coefficient. Coefficients are written with
    ``repr`` so they parse back to the identical float.
    """
    missing = [k for k in range(cmap.n_clusters) if k not in cluster_table]
    if missing:
        raise KeyError(f"cluster table lacks clusters {missing[:10]}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for ci, category in enumerate(cmap.categories):
        slug = _slug(category)
        cpath = out_dir / f"{slug}.clusters.tsv"
        vpath = out_dir / f"{slug}.voxels.tsv"
        with open(cpath, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter="\t", lineterminator="\n")
            w.writerow(["cluster_id", "coefficient"])
            for k in range(cmap.n_clusters):
                w.writerow([k, repr(float(cmap.coef[ci, k]))])
        with open(vpath, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter="\t", lineterminator="\n")
            w.writerow(["voxel_id", "cluster_id", "value"])
            for k in range(cmap.n_clusters):
                value = repr(float(cmap.coef[ci, k]))
                for voxel in cluster_table[k]:
                    w.writerow([voxel, k, value])
        written += [cpath, vpath]
    return written


def read_voxel_values(path) -> list[tuple[str, int, float]]:
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    return [(r[0], int(r[1]), float(r[2])) for r in rows[1:]]
