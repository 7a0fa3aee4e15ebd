"""Binary classification metrics, fold aggregation and report tables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

METRIC_NAMES = ("accuracy", "precision", "recall", "f1")
METRIC_HEADERS = ("Accuracy", "Precision", "Recall", "F1 Score")
TABLE_EMOTION_ORDER = ("Negative", "Neutral", "Positive")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    def metrics(self) -> dict:
        """Accuracy, precision, recall and F1; a zero denominator yields 0."""
        precision = self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0
        recall = self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        return {
            "accuracy": (self.tp + self.tn) / self.total if self.total else 0.0,
            "precision": precision,
            "recall": recall,
            "f1": f1,
        }

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass(frozen=True)
class BinaryMetrics:
    counts: ConfusionCounts
    accuracy: float
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, counts: ConfusionCounts) -> "BinaryMetrics":
        return cls(counts, **counts.metrics())

    def values(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_NAMES}

    def to_dict(self) -> dict:
        return {**self.values(), "counts": self.counts.to_dict()}


def confusion_counts(predictions, labels) -> ConfusionCounts:
    p = np.asarray(predictions).astype(int).ravel()
    y = np.asarray(labels).astype(int).ravel()
    if p.shape != y.shape:
        raise ShapeError(f"{p.shape[0]} predictions for {y.shape[0]} labels")
    if p.size == 0:
        raise ShapeError("cannot score an empty prediction set")
    if not (np.all(np.isin(y, (0, 1))) and np.all(np.isin(p, (0, 1)))):
        raise ShapeError("predictions and labels must be binary (0/1)")
    return ConfusionCounts(
        tp=int(np.sum((p == 1) & (y == 1))),
        fp=int(np.sum((p == 1) & (y == 0))),
        fn=int(np.sum((p == 0) & (y == 1))),
        tn=int(np.sum((p == 0) & (y == 0))),
    )


def compute_metrics(predictions, labels) -> BinaryMetrics:
    """Score binary predictions, treating 1 as the positive class."""
    return BinaryMetrics.from_counts(confusion_counts(predictions, labels))


@dataclass(frozen=True)
class AggregatedMetrics:
    """Per-fold metrics with their unweighted mean and spread.

    ``pooled`` scores the summed confusion counts of all folds; it is
    reported alongside the mean and is not what the tables show.
    """

    folds: tuple
    mean: dict
    std: dict
    pooled: BinaryMetrics

    @property
    def n_samples(self) -> int:
        return self.pooled.counts.total

    def to_dict(self) -> dict:
        return {
            "folds": [f.to_dict() for f in self.folds],
            "mean": dict(self.mean),
            "std": dict(self.std),
            "pooled": self.pooled.to_dict(),
            "n_samples": self.n_samples,
        }


def aggregate_folds(per_fold) -> AggregatedMetrics:
    per_fold = tuple(per_fold)
    if not per_fold:
        raise ShapeError("no folds to aggregate")
    table = {name: np.array([getattr(f, name) for f in per_fold]) for name in METRIC_NAMES}
    pooled = per_fold[0].counts
    for f in per_fold[1:]:
        pooled = pooled + f.counts
    return AggregatedMetrics(
        folds=per_fold,
        mean={k: float(np.mean(v)) for k, v in table.items()},
        std={k: float(np.std(v)) for k, v in table.items()},
        pooled=BinaryMetrics.from_counts(pooled),
    )


def render_table(title: str, rows: dict, row_header: str = "ML Algorithm", footnote: str = "") -> str:
    """Plain-text table with one row per model and four metrics per emotion.

    Args:
        rows: ``{row name: {emotion: AggregatedMetrics}}``; the fold mean is shown.
    """
    name_w = max([len(row_header), *(len(r) for r in rows)])
    cell_w = max(len(h) for h in METRIC_HEADERS)
    group_w = 4 * cell_w + 3
    head1 = f"{row_header:<{name_w}} | " + " || ".join(f"{e:^{group_w}}" for e in TABLE_EMOTION_ORDER)
    head2 = f"{'':<{name_w}} | " + " || ".join(" ".join(f"{h:>{cell_w}}" for h in METRIC_HEADERS) for _ in TABLE_EMOTION_ORDER)
    rule = "-" * len(head2)
    lines = [title, rule, head1, head2, rule]
    for name, per_emotion in rows.items():
        groups = []
        for e in TABLE_EMOTION_ORDER:
            m = per_emotion[e].mean
            groups.append(" ".join(f"{m[k]:>{cell_w}.3f}" for k in METRIC_NAMES))
        lines.append(f"{name:<{name_w}} | " + " || ".join(groups))
    lines.append(rule)
    if footnote:
        lines.append(footnote)
    return "\n".join(lines) + "\n"
