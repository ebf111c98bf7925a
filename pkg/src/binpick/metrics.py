"""Class-agnostic mask AP/AR following the COCO instance-segmentation recipe.

Differences from pycocotools are deliberate and small: one category, no
crowd regions, no area buckets, recall reported only at the full detection
budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .maskio import GroundTruthScene, InstanceLabelMap


def _default_thresholds() -> tuple[float, ...]:
    # decimal literals, so 0.60 here is the same double as an IoU of 3/5
    return tuple(round(0.50 + 0.05 * k, 2) for k in range(10))


@dataclass(frozen=True)
class EvalConfig:
    iou_thresholds: tuple[float, ...] = field(default_factory=_default_thresholds)
    max_detections: int = 100

    def __post_init__(self):
        ts = tuple(float(t) for t in self.iou_thresholds)
        if not ts:
            raise ValueError("at least one IoU threshold is required")
        if any(not (0.0 < t <= 1.0) for t in ts):
            raise ValueError("IoU thresholds must lie in (0, 1]")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("IoU thresholds must be strictly increasing")
        if self.max_detections < 1:
            raise ValueError("max_detections must be >= 1")
        object.__setattr__(self, "iou_thresholds", ts)


@dataclass(frozen=True)
class ThresholdResult:
    iou: float
    ap: float
    recall: float
    precision_curve: tuple[float, ...] = ()


@dataclass(frozen=True)
class EvalReport:
    ap: float
    ar: float
    per_threshold: tuple[ThresholdResult, ...]

    def to_dict(self) -> dict:
        return {
            "AP": self.ap,
            "AR": self.ar,
            "per_threshold": [{"iou": t.iou, "ap": t.ap, "recall": t.recall} for t in self.per_threshold],
        }


RECALL_POINTS = np.linspace(0.0, 1.0, 101)


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = int(np.count_nonzero(a | b))
    if union == 0:
        raise ValueError("IoU undefined for two empty masks")
    return int(np.count_nonzero(a & b)) / union


def iou_matrix(pred_labels: np.ndarray, pred_ids: Sequence[int], gt_labels: np.ndarray, gt_ids: Sequence[int]) -> np.ndarray:
    """IoU between every prediction and GT instance via a joint histogram."""
    if pred_labels.shape != gt_labels.shape:
        raise ValueError(f"mask shapes differ: {pred_labels.shape} vs {gt_labels.shape}")
    p = pred_labels.astype(np.int64).ravel()
    g = gt_labels.astype(np.int64).ravel()
    np_, ng = int(p.max(initial=0)) + 1, int(g.max(initial=0)) + 1
    joint = np.bincount(p * ng + g, minlength=np_ * ng).reshape(np_, ng)
    p_area = joint.sum(axis=1)
    g_area = joint.sum(axis=0)
    out = np.zeros((len(pred_ids), len(gt_ids)))
    for i, pi in enumerate(pred_ids):
        for j, gj in enumerate(gt_ids):
            inter = int(joint[pi, gj])
            if inter:
                out[i, j] = inter / int(p_area[pi] + g_area[gj] - inter)
    return out


def _ranked_predictions(pred: InstanceLabelMap, max_det: int) -> list[int]:
    # stable: equal scores keep ascending id order
    ids = sorted(pred.ids, key=lambda i: -pred.scores[i])
    return ids[:max_det]


def match_image(ious: np.ndarray, threshold: float) -> np.ndarray:
    """Greedy matching in score order. Returns the matched GT column per prediction, -1 if none."""
    n_pred, n_gt = ious.shape
    taken = np.zeros(n_gt, dtype=bool)
    matches = np.full(n_pred, -1, dtype=np.int64)
    for i in range(n_pred):
        best, best_iou = -1, threshold
        for j in range(n_gt):
            if taken[j]:
                continue
            if ious[i, j] >= best_iou and (best < 0 or ious[i, j] > ious[i, best]):
                best, best_iou = j, ious[i, j]
        if best >= 0:
            taken[best] = True
            matches[i] = best
    return matches


def _interpolated_ap(scores: np.ndarray, tp: np.ndarray, n_gt: int) -> tuple[float, float, np.ndarray]:
    """101-point interpolated AP over detections already sorted by descending score.

    Detections with equal score enter the curve together, which keeps the
    result independent of how ties happen to be ordered.
    """
    if n_gt == 0 or tp.size == 0:
        return 0.0, 0.0, np.zeros_like(RECALL_POINTS)
    group_end = np.r_[scores[1:] != scores[:-1], True]
    tps = np.cumsum(tp)[group_end]
    fps = np.cumsum(~tp)[group_end]
    recall = tps / n_gt
    precision = tps / (tps + fps)
    # precision envelope, right to left
    precision = np.maximum.accumulate(precision[::-1])[::-1]
    # recall >= k/100 decided in integers; float recall can sit one ulp under a grid point
    idx = np.searchsorted(100 * tps, np.arange(101) * n_gt, side="left")
    curve = np.zeros_like(RECALL_POINTS)
    ok = idx < len(precision)
    curve[ok] = precision[idx[ok]]
    return float(curve.mean()), float(recall[-1]), curve


def evaluate(
    predictions: Sequence[InstanceLabelMap],
    ground_truth: Sequence[GroundTruthScene | InstanceLabelMap],
    cfg: EvalConfig | None = None,
) -> EvalReport:
    cfg = cfg or EvalConfig()
    if len(predictions) != len(ground_truth):
        raise ValueError(f"{len(predictions)} prediction maps but {len(ground_truth)} ground-truth scenes")

    per_image = []
    n_gt = 0
    for pred, gt in zip(predictions, ground_truth):
        gt_map = gt.labelmap if isinstance(gt, GroundTruthScene) else gt
        gt_ids = gt_map.ids
        pred_ids = _ranked_predictions(pred, cfg.max_detections)
        ious = iou_matrix(pred.labels, pred_ids, gt_map.labels, gt_ids)
        scores = np.array([pred.scores[i] for i in pred_ids], dtype=float)
        per_image.append((scores, ious))
        n_gt += len(gt_ids)

    all_scores = np.concatenate([s for s, _ in per_image] + [np.zeros(0)])
    order = np.argsort(-all_scores, kind="stable")
    sorted_scores = all_scores[order]

    results = []
    for t in cfg.iou_thresholds:
        tp = np.concatenate([match_image(ious, t) >= 0 for _, ious in per_image] + [np.zeros(0, bool)])
        ap, rec, curve = _interpolated_ap(sorted_scores, tp[order], n_gt)
        results.append(ThresholdResult(t, ap, rec, tuple(float(x) for x in curve)))

    ap = float(np.mean([r.ap for r in results]))
    ar = float(np.mean([r.recall for r in results]))
    return EvalReport(ap, ar, tuple(results))
