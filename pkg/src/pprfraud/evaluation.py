"""Classification metrics, ROC/PR curves and the population stability index."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import PprFraudError

PSI_FLOOR = 1e-6


class SingleClassEval(PprFraudError):
    pass


class DegenerateFeature(UserWarning):
    """All training values of a feature are identical; PSI reported as 0."""


def _check(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if s.shape != y.shape:
        raise ValueError(f"{s.shape} scores vs {y.shape} labels")
    return s, y


def _both_classes(y: np.ndarray) -> tuple[int, int]:
    n1 = int(y.sum())
    n0 = len(y) - n1
    if n1 == 0 or n0 == 0:
        raise SingleClassEval("labels must contain both classes")
    return n1, n0


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC with average ranks for ties (a tie counts one half)."""
    s, y = _check(scores, labels)
    n1, n0 = _both_classes(y)
    ranks = rankdata(s, method="average")
    r1 = ranks[y == 1].sum()
    return float((r1 - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def _threshold_counts(s: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cumulative TP and FP when predicting positive at each distinct score, descending."""
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    last = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]
    tp = np.cumsum(y)[last]
    fp = (last + 1) - tp
    return s[last], tp, fp


def roc_curve(scores, labels) -> list[tuple[float, float]]:
    """(FPR, TPR) points from (0, 0) through every distinct threshold."""
    s, y = _check(scores, labels)
    n1, n0 = _both_classes(y)
    _, tp, fp = _threshold_counts(s, y)
    return [(0.0, 0.0)] + [(float(f / n0), float(t / n1)) for t, f in zip(tp, fp)]


def pr_curve(scores, labels) -> list[tuple[float, float]]:
    """(recall, precision) points, recall non-decreasing.

    Opens with the conventional (0, 1) anchor, then one point per distinct
    score taken as a threshold in descending order.
    """
    s, y = _check(scores, labels)
    n1, _ = _both_classes(y)
    _, tp, fp = _threshold_counts(s, y)
    return [(0.0, 1.0)] + [(float(t / n1), float(t / (t + f))) for t, f in zip(tp, fp)]


def average_precision(points: Sequence[tuple[float, float]]) -> float:
    """Step-wise area under a PR curve: sum of recall increments times precision."""
    ap = 0.0
    for (r0, _), (r1, p1) in zip(points, points[1:]):
        ap += (r1 - r0) * p1
    return ap


@dataclass
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int
    threshold: float = 0.5

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def precision_defined(self) -> bool:
        return self.tp + self.fp > 0

    @property
    def recall_defined(self) -> bool:
        return self.tp + self.fn > 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.precision_defined else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.recall_defined else 0.0

    def weighted(self) -> tuple[float, float]:
        """Support-weighted precision and recall over both classes."""
        n_pos, n_neg = self.tp + self.fn, self.tn + self.fp
        neg_prec = self.tn / (self.tn + self.fn) if self.tn + self.fn else 0.0
        neg_rec = self.tn / n_neg if n_neg else 0.0
        total = self.total or 1
        return (
            (n_pos * self.precision + n_neg * neg_prec) / total,
            (n_pos * self.recall + n_neg * neg_rec) / total,
        )

    def as_dict(self) -> dict:
        wp, wr = self.weighted()
        return {
            "threshold": self.threshold,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "precision_defined": self.precision_defined,
            "recall_defined": self.recall_defined,
            "weighted_precision": wp,
            "weighted_recall": wr,
        }


def confusion_at(scores, labels, threshold: float = 0.5) -> Confusion:
    """Counts when predicting fraud iff score >= threshold."""
    s, y = _check(scores, labels)
    pred = s >= threshold
    pos = y == 1
    return Confusion(
        tp=int((pred & pos).sum()),
        fp=int((pred & ~pos).sum()),
        tn=int((~pred & ~pos).sum()),
        fn=int((~pred & pos).sum()),
        threshold=threshold,
    )


@dataclass
class MetricsReport:
    auc: float
    confusion: Confusion
    roc_points: list[tuple[float, float]] = field(repr=False)
    pr_points: list[tuple[float, float]] = field(repr=False)

    @property
    def average_precision(self) -> float:
        return average_precision(self.pr_points)

    def as_dict(self) -> dict:
        return {
            "auc": self.auc,
            "average_precision": self.average_precision,
            **self.confusion.as_dict(),
            "roc_points": [list(p) for p in self.roc_points],
            "pr_points": [list(p) for p in self.pr_points],
        }


def evaluate(scores, labels, threshold: float = 0.5) -> MetricsReport:
    return MetricsReport(
        auc=roc_auc(scores, labels),
        confusion=confusion_at(scores, labels, threshold),
        roc_points=roc_curve(scores, labels),
        pr_points=pr_curve(scores, labels),
    )


@dataclass
class PsiEntry:
    feature: str
    psi: float
    edges: list[float]  # interior edges; bins are (-inf, e0], (e0, e1], ..., (e_last, inf)
    n_actual: int
    n_expected: int
    actual_counts: list[int]
    expected_counts: list[int]
    q_actual: list[float]
    q_expected: list[float]
    degenerate: bool = False

    @property
    def flag(self) -> str:
        return "degenerate" if self.degenerate else ""


def psi_from_proportions(q_actual, q_expected, floor: float = PSI_FLOOR) -> float:
    """Sum over bins of (q_a - q_e) * ln(q_a / q_e), proportions floored at ``floor``."""
    qa = np.maximum(np.asarray(q_actual, dtype=np.float64), floor)
    qe = np.maximum(np.asarray(q_expected, dtype=np.float64), floor)
    return float(((qa - qe) * np.log(qa / qe)).sum())


def quantile_edges(actual: np.ndarray, n_bins: int) -> np.ndarray:
    """Interior equal-frequency edges of ``actual`` with duplicates merged."""
    qs = np.linspace(0.0, 1.0, n_bins + 1)[1:-1]
    return np.unique(np.quantile(actual, qs))


def psi(actual, expected, n_bins: int = 10, feature: str = "") -> PsiEntry:
    """Population stability of ``expected`` against bins fit on ``actual``.

    A feature whose training values are all identical gets a single bin, PSI 0
    and the ``degenerate`` flag (a :class:`DegenerateFeature` warning is not
    raised here; callers read the flag).
    """
    a = np.asarray(actual, dtype=np.float64)
    e = np.asarray(expected, dtype=np.float64)
    if a.size == 0 or e.size == 0:
        raise ValueError("psi needs non-empty samples")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if np.all(a == a[0]):
        return PsiEntry(feature, 0.0, [], a.size, e.size, [a.size], [e.size], [1.0], [1.0], degenerate=True)
    edges = quantile_edges(a, n_bins)
    n_b = len(edges) + 1
    ca = np.bincount(np.searchsorted(edges, a, side="left"), minlength=n_b)
    ce = np.bincount(np.searchsorted(edges, e, side="left"), minlength=n_b)
    qa = ca / a.size
    qe = ce / e.size
    return PsiEntry(
        feature=feature,
        psi=psi_from_proportions(qa, qe),
        edges=edges.tolist(),
        n_actual=int(a.size),
        n_expected=int(e.size),
        actual_counts=ca.tolist(),
        expected_counts=ce.tolist(),
        q_actual=qa.tolist(),
        q_expected=qe.tolist(),
    )


def write_psi(entries: Sequence[PsiEntry], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["feature", "psi", "flag"])
    for e in entries:
        writer.writerow([e.feature, repr(e.psi), e.flag])


def write_curve(curves: dict[str, Sequence[tuple[float, float]]], x_name: str, y_name: str, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["model", x_name, y_name])
    for name, pts in curves.items():
        for x, y in pts:
            writer.writerow([name, repr(float(x)), repr(float(y))])
