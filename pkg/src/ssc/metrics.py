"""Binary classification metrics and cross-validation orchestration.

All measures target the positive class: precision_p, recall_p and f1_p use
the zero-division convention (0 when the denominator is 0) so heavily
imbalanced folds with no positive predictions stay well-defined.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .corpus import Dataset, FoldPlan, fold_datasets

MEASURES = ("accuracy", "precision_p", "recall_p", "f1_p")


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision_p: float
    recall_p: float
    f1_p: float
    tp: float
    fp: float
    fn: float
    tn: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, tn: int) -> "MetricsReport":
        total = tp + fp + fn + tn
        if total <= 0:
            raise ValueError("empty confusion matrix")
        accuracy = (tp + tn) / total
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        return cls(accuracy, precision, recall, f1, tp, fp, fn, tn)

    def value(self, measure: str) -> float:
        if measure not in MEASURES:
            raise ValueError(f"unknown measure {measure!r}")
        return getattr(self, measure)

    def csv_row(self, scenario: str, model: str, decimals: int = 6) -> str:
        vals = ",".join(f"{self.value(m):.{decimals}f}" for m in MEASURES)
        counts = ",".join(f"{c:g}" for c in (self.tp, self.fp, self.fn, self.tn))
        return f"{scenario},{model},{vals},{counts}"


CSV_HEADER = "scenario,model,accuracy,precision_p,recall_p,f1_p,tp,fp,fn,tn"


def compute_metrics(pred: Sequence[int], gold: Sequence[int]) -> MetricsReport:
    """Confusion counts and the four measures for aligned prediction lists."""
    if len(pred) != len(gold):
        raise ValueError(f"length mismatch: {len(pred)} predictions vs {len(gold)} labels")
    if len(pred) == 0:
        raise ValueError("cannot compute metrics on empty lists")
    tp = fp = fn = tn = 0
    for p, g in zip(pred, gold):
        if p == 1 and g == 1:
            tp += 1
        elif p == 1 and g == 0:
            fp += 1
        elif p == 0 and g == 1:
            fn += 1
        else:
            tn += 1
    return MetricsReport.from_counts(tp, fp, fn, tn)


def mean_report(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Unweighted arithmetic mean of each measure (and of the counts).

    The averaged measures are means of per-report measures, not metrics
    recomputed from the averaged confusion counts.
    """
    if not reports:
        raise ValueError("cannot average zero reports")
    n = len(reports)
    return MetricsReport(
        accuracy=sum(r.accuracy for r in reports) / n,
        precision_p=sum(r.precision_p for r in reports) / n,
        recall_p=sum(r.recall_p for r in reports) / n,
        f1_p=sum(r.f1_p for r in reports) / n,
        tp=sum(r.tp for r in reports) / n,
        fp=sum(r.fp for r in reports) / n,
        fn=sum(r.fn for r in reports) / n,
        tn=sum(r.tn for r in reports) / n,
    )


class CrossValidationError(RuntimeError):
    """A fold's trainer failed; carries the fold index."""

    def __init__(self, fold: int, cause: Exception):
        super().__init__(f"fold {fold} failed: {cause}")
        self.fold = fold


@dataclass(frozen=True)
class CrossValidationResult:
    per_fold: tuple[MetricsReport, ...]
    mean: MetricsReport


def cross_validate(
    pool: Dataset,
    folds: FoldPlan,
    recipe: Callable[[Dataset, Dataset, int], Sequence[int]],
) -> CrossValidationResult:
    """Run a train/predict recipe on every fold and average the reports.

    recipe(train, test, fold_index) must return one predicted class per
    test item. Any recipe failure aborts with the offending fold index.
    """
    reports = []
    for i in range(folds.k):
        train, test = fold_datasets(pool, folds, i)
        try:
            pred = recipe(train, test, i)
        except Exception as e:
            raise CrossValidationError(i, e) from e
        gold = [t.label for t in test]
        reports.append(compute_metrics(list(pred), gold))
    return CrossValidationResult(tuple(reports), mean_report(reports))
