"""Segmentation overlap metrics and binary classification metrics.

Undefined ratios (zero denominator) are ``None``; they serialise to JSON
``null`` and print as ``NaN``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from cvsroi.errors import DimensionMismatch, LengthMismatch
from cvsroi.label_io import LabelMap

CRITERIA = ("c1", "c2", "c3", "cvs")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)

    @classmethod
    def from_pairs(cls, truth: Iterable[bool], pred: Iterable[bool]) -> "ConfusionCounts":
        tp = fp = tn = fn = 0
        for t, p in zip(truth, pred):
            if t and p:
                tp += 1
            elif p:
                fp += 1
            elif t:
                fn += 1
            else:
                tn += 1
        return cls(tp, fp, tn, fn)


@dataclass(frozen=True)
class ClassMetrics:
    iou: Dict[int, Optional[float]]
    dice: Dict[int, Optional[float]]
    miou: Optional[float]
    mdice: Optional[float]
    pixel_acc: float


def _ratio(num, den) -> Optional[float]:
    return None if den == 0 else num / den


def seg_metrics(gt: LabelMap, pred: LabelMap, classes: Sequence[int]) -> ClassMetrics:
    """Per-class IoU and Dice plus pixel accuracy.

    Classes absent from both maps get ``None`` and are left out of the means.
    """
    if gt.shape != pred.shape:
        raise DimensionMismatch(f"gt {gt.width}x{gt.height} vs pred {pred.width}x{pred.height}")
    iou, dice = {}, {}
    for c in classes:
        g = gt.data == c
        p = pred.data == c
        inter = int(np.count_nonzero(g & p))
        union = int(np.count_nonzero(g | p))
        iou[c] = _ratio(inter, union)
        dice[c] = _ratio(2 * inter, int(g.sum()) + int(p.sum()))
    defined = [v for v in iou.values() if v is not None]
    defined_d = [v for v in dice.values() if v is not None]
    acc = float(np.count_nonzero(gt.data == pred.data)) / gt.data.size
    return ClassMetrics(
        iou,
        dice,
        sum(defined) / len(defined) if defined else None,
        sum(defined_d) / len(defined_d) if defined_d else None,
        acc,
    )


def binary_metrics(cc: ConfusionCounts) -> Dict[str, Optional[float]]:
    if cc.total <= 0:
        raise ValueError("binary_metrics needs at least one scored frame")
    sens = _ratio(cc.tp, cc.tp + cc.fn)
    spec = _ratio(cc.tn, cc.tn + cc.fp)
    bacc = None if sens is None or spec is None else (sens + spec) / 2
    return {
        "acc": (cc.tp + cc.tn) / cc.total,
        "bacc": bacc,
        "ppv": _ratio(cc.tp, cc.tp + cc.fp),
        "npv": _ratio(cc.tn, cc.tn + cc.fn),
    }


def _labels_of(item) -> Mapping[str, bool]:
    if isinstance(item, Mapping):
        return item
    return item.labels()


def score_run(gt_labels: Sequence, predictions: Sequence) -> Dict[str, dict]:
    """Confusion counts and binary metrics for each criterion.

    Both sequences hold per-frame ``{c1, c2, c3, cvs}`` mappings (or objects with
    a ``labels()`` method), aligned by index.
    """
    if len(gt_labels) != len(predictions):
        raise LengthMismatch(f"{len(gt_labels)} truth frames vs {len(predictions)} predictions")
    truth = [_labels_of(t) for t in gt_labels]
    pred = [_labels_of(p) for p in predictions]
    out = {}
    for k in CRITERIA:
        cc = ConfusionCounts.from_pairs((bool(t[k]) for t in truth), (bool(p[k]) for p in pred))
        out[k] = {"counts": {"tp": cc.tp, "fp": cc.fp, "tn": cc.tn, "fn": cc.fn}, **binary_metrics(cc)}
    return out


def format_metric(v: Optional[float]) -> str:
    return "NaN" if v is None else f"{v:.4f}"


def format_table(report: Dict[str, dict]) -> List[str]:
    lines = ["criterion  acc     bacc    ppv     npv"]
    for k, m in report.items():
        lines.append(f"{k.upper():<10} " + " ".join(f"{format_metric(m[n]):<7}" for n in ("acc", "bacc", "ppv", "npv")))
    return lines
