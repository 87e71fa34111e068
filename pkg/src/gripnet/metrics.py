"""Ranking and classification metrics, plus the stratified train/test split.

Ranking metrics are computed per edge label and macro-averaged: AUROC as the
Mann-Whitney statistic with ties counted 0.5, AUPRC as the stepwise area under
the descending-score precision-recall sweep, and AP@50 as average precision
truncated at rank 50 and normalized by min(50, #positives). Ties in the sweep
are broken by ascending item id so results are reproducible.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.stats import rankdata


class DegenerateLabelError(ValueError):
    """Raised when a label has no positives or no negatives."""


def _sig10(x: float) -> float:
    return float(f"{x:.10g}")


@dataclass(frozen=True)
class LabelRanking:
    auroc: float
    auprc: float
    ap50: float

    def to_json_dict(self) -> dict:
        return {
            "auroc": _sig10(self.auroc),
            "auprc": _sig10(self.auprc),
            "ap50": _sig10(self.ap50),
        }


@dataclass(frozen=True)
class RankingReport:
    """Per-label ranking metrics and their unweighted (macro) averages."""

    per_label: dict[str, LabelRanking]
    skipped_labels: list[str] = field(default_factory=list)

    @property
    def macro_auroc(self) -> float:
        return float(np.mean([m.auroc for m in self.per_label.values()]))

    @property
    def macro_auprc(self) -> float:
        return float(np.mean([m.auprc for m in self.per_label.values()]))

    @property
    def macro_ap50(self) -> float:
        return float(np.mean([m.ap50 for m in self.per_label.values()]))

    def to_json_dict(self) -> dict:
        return {
            "per_label": {
                lab: m.to_json_dict() for lab, m in sorted(self.per_label.items())
            },
            "macro": {
                "auroc": _sig10(self.macro_auroc),
                "auprc": _sig10(self.macro_auprc),
                "ap50": _sig10(self.macro_ap50),
            },
            "skipped_labels": sorted(self.skipped_labels),
        }


@dataclass(frozen=True)
class F1Report:
    """Micro/macro F1 with per-class precision, recall, and F1."""

    micro_f1: float
    macro_f1: float
    per_class: dict[str, dict[str, float]]

    def to_json_dict(self) -> dict:
        return {
            "micro_f1": _sig10(self.micro_f1),
            "macro_f1": _sig10(self.macro_f1),
            "per_class": {
                cls: {k: _sig10(v) for k, v in stats.items()}
                for cls, stats in sorted(self.per_class.items())
            },
        }


@dataclass(frozen=True)
class SplitSpec:
    """Stratified split settings; every stratum sends ceil((1-fraction)*n)
    items to test, so each contributes at least one test item."""

    train_fraction: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(
                f"train_fraction must be in (0, 1), got {self.train_fraction}"
            )

    def test_count(self, n: int) -> int:
        # Exact decimal arithmetic: float ceil would misround e.g. 0.1 * 10.
        frac = Fraction(str(self.train_fraction))
        return math.ceil((1 - frac) * n)


def rank_metrics(scores, labels, k: int = 50) -> tuple[float, float, float]:
    """AUROC, AUPRC, and AP@k for one binary ranking problem.

    ``labels`` are 0/1 per item; requires at least one of each. The sweep
    orders by descending score with ties broken by ascending item id.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be matching 1-D arrays")
    n_pos = int(labels.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelError(
            f"need at least one positive and one negative, got {n_pos}/{n_neg}"
        )

    ranks = rankdata(scores, method="average")
    auroc = (ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)

    order = np.lexsort((np.arange(scores.size), -scores))
    hits = labels[order] == 1
    tp = np.cumsum(hits)
    positions = np.arange(1, scores.size + 1)
    precision = tp / positions
    auprc = float(precision[hits].sum() / n_pos)

    top = min(k, scores.size)
    ap_at_k = float(precision[:top][hits[:top]].sum() / min(k, n_pos))

    return float(auroc), auprc, ap_at_k


def ranking_report(per_label: dict[str, tuple[np.ndarray, np.ndarray]]) -> RankingReport:
    """Per-label metrics from {label: (scores, binary labels)}; degenerate
    labels are skipped from the macro average with a warning."""
    metrics: dict[str, LabelRanking] = {}
    skipped: list[str] = []
    for lab in sorted(per_label):
        scores, labels = per_label[lab]
        try:
            auroc, auprc, ap50 = rank_metrics(scores, labels)
        except DegenerateLabelError:
            warnings.warn(
                f"label {lab!r} has no positives or no negatives in the test "
                "set; excluded from macro averages",
                stacklevel=2,
            )
            skipped.append(lab)
            continue
        metrics[lab] = LabelRanking(auroc=auroc, auprc=auprc, ap50=ap50)
    if not metrics:
        raise DegenerateLabelError("every label was degenerate")
    return RankingReport(per_label=metrics, skipped_labels=skipped)


def f1_metrics(predicted, true, classes=None) -> F1Report:
    """Micro/macro F1 from global and per-class confusion counts.

    ``classes`` fixes the class set; by default it is the union of observed
    values. A class absent from both truth and prediction contributes F1 = 0
    to the macro average, with a warning.
    """
    predicted = list(predicted)
    true = list(true)
    if len(predicted) != len(true):
        raise ValueError(
            f"length mismatch: {len(predicted)} predictions, {len(true)} labels"
        )
    if classes is None:
        classes = sorted(set(predicted) | set(true))
    else:
        classes = sorted(classes)
        unknown = (set(predicted) | set(true)) - set(classes)
        if unknown:
            raise ValueError(f"values outside the class set: {sorted(unknown)}")

    per_class: dict[str, dict[str, float]] = {}
    total_tp = total_fp = total_fn = 0
    for cls in classes:
        tp = sum(1 for p, t in zip(predicted, true) if p == cls and t == cls)
        fp = sum(1 for p, t in zip(predicted, true) if p == cls and t != cls)
        fn = sum(1 for p, t in zip(predicted, true) if p != cls and t == cls)
        if tp + fp + fn == 0:
            warnings.warn(
                f"class {cls!r} absent from truth and prediction; "
                "its F1 counts as 0 in the macro average",
                stacklevel=2,
            )
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        per_class[cls] = {"precision": prec, "recall": rec, "f1": f1}
        total_tp += tp
        total_fp += fp
        total_fn += fn

    micro_p = total_tp / (total_tp + total_fp) if total_tp + total_fp else 0.0
    micro_r = total_tp / (total_tp + total_fn) if total_tp + total_fn else 0.0
    micro = 2 * micro_p * micro_r / (micro_p + micro_r) if micro_p + micro_r else 0.0
    macro = float(np.mean([stats["f1"] for stats in per_class.values()]))
    return F1Report(micro_f1=micro, macro_f1=macro, per_class=per_class)


def stratified_split(items, spec: SplitSpec, key) -> tuple[list, list]:
    """Split ``items`` into (train, test) preserving per-stratum proportions.

    Each stratum (as computed by ``key``) is shuffled with the spec seed and
    its first ``ceil((1-fraction)*n)`` members go to test. Deterministic per
    seed; train and test are disjoint and exhaustive.
    """
    items = list(items)
    if not items:
        raise ValueError("cannot split an empty item list")
    groups: dict = {}
    for item in items:
        groups.setdefault(key(item), []).append(item)
    rng = np.random.default_rng(spec.seed)
    train: list = []
    test: list = []
    for stratum in sorted(groups):
        members = groups[stratum]
        perm = rng.permutation(len(members))
        n_test = spec.test_count(len(members))
        chosen = set(perm[:n_test].tolist())
        for i, item in enumerate(members):
            (test if i in chosen else train).append(item)
    return train, test
