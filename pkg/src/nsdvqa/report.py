"""Human tables and a round-trippable machine file for evaluation results."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .metrics.evaluate import EvalReport
from .stats import aggregate_subjects, bootstrap_std, paired_bootstrap

MACHINE_HEADER = ("section", "row", "column", "value")
PERCENT_METRICS = frozenset({"accuracy", "accuracy_macro", "vqa"})


def fmt(value: Optional[float], digits: int = 2) -> str:
    return "" if value is None else f"{value:.{digits}f}"


def fmt_mean_std(mean: float, std: Optional[float], digits: int = 2) -> str:
    return fmt(mean, digits) if std is None else f"{mean:.{digits}f} ± {std:.{digits}f}"


def align_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    rule = "  ".join("-" * w for w in widths)

    def line(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    return "\n".join([line(header), rule] + [line(r) for r in rows]) + "\n"


def category_grid(cells: Mapping[str, str], columns: int = 3, title: str = "Acc (%)") -> str:
    """Column-major grid of (category, value) pairs; trailing cells stay blank."""
    names = sorted(cells)
    n_rows = max(1, math.ceil(len(names) / columns)) if names else 0
    header = []
    for _ in range(columns):
        header += ["Category", title]
    rows = []
    for r in range(n_rows):
        row = []
        for c in range(columns):
            i = c * n_rows + r
            row += [names[i], cells[names[i]]] if i < len(names) else ["", ""]
        rows.append(row)
    return align_table(header, rows)


@dataclass
class Table:
    """Named grid of numeric cells; ``rows × columns`` with optional blanks."""

    section: str
    rows: list[str]
    columns: list[str]
    values: dict[tuple[str, str], float] = field(default_factory=dict)

    def get(self, row, column):
        return self.values.get((row, column))


def dumps_machine(tables: Sequence[Table]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(MACHINE_HEADER)
    for t in tables:
        for r in t.rows:
            for c in t.columns:
                v = t.get(r, c)
                if v is not None:
                    w.writerow([t.section, r, c, repr(float(v))])
    return buf.getvalue()


def loads_machine(text: str) -> list[Table]:
    reader = csv.reader(io.StringIO(text), delimiter="\t")
    header = next(reader, None)
    if tuple(header or ()) != MACHINE_HEADER:
        raise ValueError("not a report machine file")
    tables: dict[str, Table] = {}
    for section, row, column, value in reader:
        t = tables.setdefault(section, Table(section, [], []))
        if row not in t.rows:
            t.rows.append(row)
        if column not in t.columns:
            t.columns.append(column)
        t.values[(row, column)] = float(value)
    return list(tables.values())


def _subject_label(report: EvalReport) -> str:
    return f"S{report.subject_id}" if report.subject_id is not None else report.run_id


def _labels(reports: Sequence[EvalReport]) -> list[str]:
    """Column labels per report; repeated labels get the run id, then an index."""
    base = [_subject_label(r) for r in reports]
    out = []
    for lab, r in zip(base, reports):
        if base.count(lab) > 1:
            lab = f"{lab}:{r.run_id}"
        while lab in out:
            lab += "'"
        out.append(lab)
    return out


def subject_table(reports: Sequence[EvalReport], section: str = "overall") -> Table:
    """Overall metrics by subject, plus mean and std columns when ≥ 2 subjects.

    Accuracy-type metrics are shown as percentages, like the text metrics.
    """
    labels = _labels(reports)
    metrics = sorted({k for r in reports for k in r.overall if k not in ("n", "missing")},
                     key=lambda m: (m != "accuracy", m))
    t = Table(section, metrics, labels + (["mean", "std"] if len(reports) > 1 else []))
    for m in metrics:
        scale = 100.0 if m in PERCENT_METRICS else 1.0
        per = {lab: scale * r.overall[m] for lab, r in zip(labels, reports) if m in r.overall}
        for lab, v in per.items():
            t.values[(m, lab)] = v
        if len(per) > 1:
            mean, std = aggregate_subjects(per)
            t.values[(m, "mean")], t.values[(m, "std")] = mean, std
    return t


def category_table(reports: Sequence[EvalReport], metric: str = "accuracy", scale: float = 100.0) -> Table:
    labels = _labels(reports)
    cats = sorted({c for r in reports for c in r.per_category})
    t = Table(f"category_{metric}", cats, labels + (["mean", "std"] if len(reports) > 1 else []))
    for c in cats:
        per = {lab: scale * r.per_category[c][metric]
               for lab, r in zip(labels, reports) if c in r.per_category}
        for lab, v in per.items():
            t.values[(c, lab)] = v
        if len(per) > 1:
            mean, std = aggregate_subjects(per)
            t.values[(c, "mean")], t.values[(c, "std")] = mean, std
    return t


def comparison_table(candidate: EvalReport, baseline: EvalReport, n_boot: int = 10_000,
                     seed: int = 0, alternative: str = "greater", metric: str = "accuracy") -> Table:
    """Per-category candidate vs baseline with bootstrap std and paired-bootstrap p-values."""
    cand = candidate.record_scores(metric)
    base = baseline.record_scores(metric)
    cat_of = {r["question_id"]: r["category"] for r in candidate.records}
    shared = sorted(set(cand) & set(base))
    t = Table("comparison", [], ["candidate", "candidate_std", "baseline", "baseline_std", "p_value"])
    for ci, c in enumerate(sorted({cat_of[q] for q in shared})):
        qs = [q for q in shared if cat_of[q] == c]
        a = np.array([cand[q] for q in qs], dtype=float)
        b = np.array([base[q] for q in qs], dtype=float)
        t.rows.append(c)
        t.values[(c, "candidate")] = 100.0 * a.mean()
        t.values[(c, "baseline")] = 100.0 * b.mean()
        if len(qs) >= 2:
            t.values[(c, "candidate_std")] = 100.0 * bootstrap_std(a, n_boot, rng=seed + 2 * ci)
            t.values[(c, "baseline_std")] = 100.0 * bootstrap_std(b, n_boot, rng=seed + 2 * ci + 1)
        t.values[(c, "p_value")] = paired_bootstrap(a, b, n_boot, rng=seed + ci, alternative=alternative)
    return t


def render_table(t: Table, digits: int = 2) -> str:
    """Aligned text; a mean column absorbs the std column as ``mean ± std``."""
    cols = [c for c in t.columns if c != "std"]
    rows = []
    for r in t.rows:
        cells = [r]
        for c in cols:
            v = t.get(r, c)
            if c == "mean":
                cells.append("" if v is None else fmt_mean_std(v, t.get(r, "std"), digits))
            elif c == "p_value":
                cells.append("" if v is None else f"{v:.4f}")
            else:
                cells.append(fmt(v, digits))
        rows.append(cells)
    return align_table([t.section] + cols, rows)


def render_comparison(t: Table, alpha: float = 0.05, digits: int = 2) -> str:
    """Two values per category, ``*`` marking a significant candidate improvement."""
    rows = []
    for r in t.rows:
        cand = fmt_mean_std(t.get(r, "candidate"), t.get(r, "candidate_std"), digits)
        base = fmt_mean_std(t.get(r, "baseline"), t.get(r, "baseline_std"), digits)
        p = t.get(r, "p_value")
        rows.append([r, base, cand + (" *" if p is not None and p < alpha else ""), f"{p:.4f}"])
    return align_table(["Category", "baseline", "candidate", "p"], rows)


def render_report(reports: Sequence[EvalReport], layout: str = "all",
                  baseline: Optional[EvalReport] = None, n_boot: int = 10_000, seed: int = 0,
                  alternative: str = "greater") -> tuple[str, str]:
    """Return (human text, machine TSV) for ``reports``.

    Layouts: ``subjects`` (metrics × subjects), ``grid`` (per-category
    accuracy in a 3-column grid, mean ± std across subjects), ``all`` (both,
    plus a baseline comparison when ``baseline`` is given).
    """
    if layout not in ("all", "subjects", "grid"):
        raise ValueError(f"unknown layout {layout!r}")
    tables, parts = [], []
    if layout in ("all", "subjects") and reports:
        t = subject_table(reports)
        tables.append(t)
        parts.append(render_table(t))
    if layout in ("all", "grid") and reports and any(r.per_category for r in reports):
        t = category_table(reports)
        tables.append(t)
        col = "mean" if "mean" in t.columns else t.columns[0]
        cells = {c: fmt_mean_std(t.get(c, col), t.get(c, "std")) for c in t.rows}
        parts.append(category_grid(cells))
    if baseline is not None and reports and layout == "all":
        t = comparison_table(reports[0], baseline, n_boot, seed, alternative)
        tables.append(t)
        parts.append(render_comparison(t))
    return "\n".join(parts), dumps_machine(tables)
