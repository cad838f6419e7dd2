"""Detection quality scoring against planted ground truth."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .geometry import BBox, iou
from .providers.base import normalize_label


@dataclass
class MatchCounts:
    true_positives: int = 0
    false_positives: int = 0
    false_negatives: int = 0

    @property
    def precision(self) -> float:
        denom = self.true_positives + self.false_positives
        return self.true_positives / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.true_positives + self.false_negatives
        return self.true_positives / denom if denom else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def add(self, other: "MatchCounts") -> None:
        self.true_positives += other.true_positives
        self.false_positives += other.false_positives
        self.false_negatives += other.false_negatives


# (label, box) or (label, box, score); score orders the greedy matching
Prediction = Tuple


def _normalize(items: Sequence[Prediction]) -> List[Tuple[str, BBox, float]]:
    out = []
    for item in items:
        label, box = item[0], item[1]
        score = float(item[2]) if len(item) > 2 else 1.0
        out.append((normalize_label(label), box, score))
    return out


def match_image(
    predictions: Sequence[Prediction],
    truth: Sequence[Prediction],
    iou_threshold: float = 0.5,
) -> MatchCounts:
    """Greedy one-to-one matching, highest-scoring predictions first.

    A prediction matches an unclaimed truth object when labels agree and the
    boxes overlap at or above iou_threshold; everything unmatched counts as a
    false positive or false negative.
    """
    preds = sorted(_normalize(predictions), key=lambda p: -p[2])
    gold = _normalize(truth)
    claimed = [False] * len(gold)
    counts = MatchCounts()
    for label, box, _score in preds:
        best_index: Optional[int] = None
        best_overlap = 0.0
        for i, (gold_label, gold_box, _) in enumerate(gold):
            if claimed[i] or gold_label != label:
                continue
            overlap = iou(box, gold_box)
            if overlap >= iou_threshold and overlap > best_overlap:
                best_overlap = overlap
                best_index = i
        if best_index is None:
            counts.false_positives += 1
        else:
            claimed[best_index] = True
            counts.true_positives += 1
    counts.false_negatives = claimed.count(False)
    return counts


def match_dataset(
    predictions_by_image: Dict[str, Sequence[Prediction]],
    truth_by_image: Dict[str, Sequence[Prediction]],
    iou_threshold: float = 0.5,
) -> MatchCounts:
    total = MatchCounts()
    for name in sorted(set(predictions_by_image) | set(truth_by_image)):
        total.add(
            match_image(
                predictions_by_image.get(name, ()),
                truth_by_image.get(name, ()),
                iou_threshold,
            )
        )
    return total
