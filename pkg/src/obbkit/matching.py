"""Composite matching cost, Hungarian assignment, and the training loss.

The match cost per (prediction, ground truth) pair is

    lambda_cls * focal_cost + lambda_l1 * l1_cost + lambda_iou * (1 - IoU)

with lambda defaults (2.0, 5.0, 2.0). The classification term is the signed
focal cost (positive minus negative focal term, so it can go below zero);
the training loss uses the positive focal term only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import geometry
from .errors import ValidationError
from .types import OrientedBox

DEFAULT_LAMBDA_CLS = 2.0
DEFAULT_LAMBDA_L1 = 5.0
DEFAULT_LAMBDA_IOU = 2.0
DEFAULT_FOCAL_ALPHA = 0.25
DEFAULT_FOCAL_GAMMA = 2.0

_PROB_EPS = 1e-8


@dataclass(frozen=True)
class MatchWeights:
    lambda_cls: float = DEFAULT_LAMBDA_CLS
    lambda_l1: float = DEFAULT_LAMBDA_L1
    lambda_iou: float = DEFAULT_LAMBDA_IOU

    def __post_init__(self):
        for name in ("lambda_cls", "lambda_l1", "lambda_iou"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise ValidationError(f"{name} must be >= 0, got {v!r}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class PairCost:
    """Unweighted cost components for one matched pair."""

    cls: float
    l1: float
    iou: float
    total: float


@dataclass(frozen=True)
class MatchResult:
    """One-to-one assignment: pair (i, j) matches prediction i to gt j.

    `pair_costs` is filled by match_sets and None when the assignment was
    solved from a bare cost matrix.
    """

    pairs: tuple[tuple[int, int], ...]
    total_cost: float
    pair_costs: tuple[PairCost, ...] | None = None


@dataclass(frozen=True)
class LossBreakdown:
    """Normalized loss components; total carries the lambda weighting."""

    cls_loss: float
    l1_loss: float
    iou_loss: float
    total: float


def _clamp_prob(p: float) -> float:
    if p < _PROB_EPS:
        return _PROB_EPS
    if p > 1.0 - _PROB_EPS:
        return 1.0 - _PROB_EPS
    return p


def focal_cls_cost(prob_of_gt_class: float,
                   alpha: float = DEFAULT_FOCAL_ALPHA,
                   gamma: float = DEFAULT_FOCAL_GAMMA) -> float:
    """Signed focal matching cost; strictly decreasing in the probability."""
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must be in [0, 1], got {alpha!r}")
    if gamma < 0:
        raise ValidationError(f"gamma must be >= 0, got {gamma!r}")
    p = _clamp_prob(float(prob_of_gt_class))
    pos = alpha * (1.0 - p) ** gamma * (-math.log(p))
    neg = (1.0 - alpha) * p ** gamma * (-math.log(1.0 - p))
    return pos - neg


def focal_cls_loss(prob_of_gt_class: float,
                   alpha: float = DEFAULT_FOCAL_ALPHA,
                   gamma: float = DEFAULT_FOCAL_GAMMA) -> float:
    """Positive focal loss term for a matched (foreground) prediction."""
    p = _clamp_prob(float(prob_of_gt_class))
    return alpha * (1.0 - p) ** gamma * (-math.log(p))


def l1_box_cost(pred: OrientedBox, gt: OrientedBox,
                image_w: float, image_h: float,
                include_angle: bool = True) -> float:
    """Sum of |differences| over (cx/W, cy/H, w/W, h/H, theta/pi)."""
    d = (abs(pred.cx / image_w - gt.cx / image_w)
         + abs(pred.cy / image_h - gt.cy / image_h)
         + abs(pred.w / image_w - gt.w / image_w)
         + abs(pred.h / image_h - gt.h / image_h))
    if include_angle:
        d += abs(pred.theta / math.pi - gt.theta / math.pi)
    return d


def iou_box_cost(pred: OrientedBox, gt: OrientedBox) -> float:
    """1 - rotated IoU; 0 for identical boxes, 1 for disjoint ones."""
    return 1.0 - geometry.rotated_iou(pred, gt)


def cost_matrix(pred_boxes, pred_probs, gt_boxes,
                weights: MatchWeights = MatchWeights(),
                image_w: float = 1.0, image_h: float = 1.0,
                alpha: float = DEFAULT_FOCAL_ALPHA,
                gamma: float = DEFAULT_FOCAL_GAMMA,
                include_angle: bool = True) -> np.ndarray:
    """(n_pred, n_gt) composite cost matrix."""
    pred_boxes = list(pred_boxes)
    gt_boxes = list(gt_boxes)
    probs = [float(p) for p in pred_probs]
    if len(probs) != len(pred_boxes):
        raise ValidationError(
            f"{len(pred_boxes)} boxes vs {len(probs)} probabilities"
        )
    n, m = len(pred_boxes), len(gt_boxes)
    out = np.zeros((n, m), dtype=np.float64)
    if n == 0 or m == 0:
        return out
    iou = geometry.iou_matrix(pred_boxes, gt_boxes)
    for i in range(n):
        cls_i = focal_cls_cost(probs[i], alpha, gamma)
        for j in range(m):
            l1 = l1_box_cost(pred_boxes[i], gt_boxes[j], image_w, image_h,
                             include_angle)
            out[i, j] = (weights.lambda_cls * cls_i
                         + weights.lambda_l1 * l1
                         + weights.lambda_iou * (1.0 - iou[i, j]))
    return out


def hungarian(cost: np.ndarray) -> MatchResult:
    """Globally optimal one-to-one assignment of min(rows, cols) pairs."""
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ValidationError(f"cost matrix must be 2-D, got shape {cost.shape}")
    if cost.size and not np.all(np.isfinite(cost)):
        raise ValidationError("cost matrix contains non-finite entries")
    if cost.shape[0] == 0 or cost.shape[1] == 0:
        return MatchResult(pairs=(), total_cost=0.0)
    rows, cols = linear_sum_assignment(cost)
    pairs = tuple((int(r), int(c)) for r, c in zip(rows, cols))
    total = 0.0
    for r, c in pairs:
        total += float(cost[r, c])
    return MatchResult(pairs=pairs, total_cost=total)


def match_sets(pred_boxes, pred_probs, gt_boxes,
               weights: MatchWeights = MatchWeights(),
               image_w: float = 1.0, image_h: float = 1.0,
               alpha: float = DEFAULT_FOCAL_ALPHA,
               gamma: float = DEFAULT_FOCAL_GAMMA,
               include_angle: bool = True) -> MatchResult:
    """Build the composite cost matrix, solve it, and report pair costs."""
    pred_boxes = list(pred_boxes)
    gt_boxes = list(gt_boxes)
    probs = [float(p) for p in pred_probs]
    cost = cost_matrix(pred_boxes, probs, gt_boxes, weights,
                       image_w, image_h, alpha, gamma, include_angle)
    result = hungarian(cost)
    breakdown = []
    for i, j in result.pairs:
        cls_c = focal_cls_cost(probs[i], alpha, gamma)
        l1_c = l1_box_cost(pred_boxes[i], gt_boxes[j], image_w, image_h,
                           include_angle)
        iou_c = iou_box_cost(pred_boxes[i], gt_boxes[j])
        breakdown.append(PairCost(cls=cls_c, l1=l1_c, iou=iou_c,
                                  total=float(cost[i, j])))
    return MatchResult(pairs=result.pairs, total_cost=result.total_cost,
                       pair_costs=tuple(breakdown))


def training_loss(matched, num_objects_in_batch: int,
                  weights: MatchWeights = MatchWeights(),
                  image_w: float = 1.0, image_h: float = 1.0,
                  alpha: float = DEFAULT_FOCAL_ALPHA,
                  gamma: float = DEFAULT_FOCAL_GAMMA,
                  include_angle: bool = True) -> LossBreakdown:
    """Per-pair losses summed over `matched` (prob, pred_box, gt_box) triples
    and normalized by the object count of the whole batch."""
    if not isinstance(num_objects_in_batch, int) or num_objects_in_batch < 1:
        raise ValidationError(
            f"num_objects_in_batch must be a positive int, "
            f"got {num_objects_in_batch!r}"
        )
    cls_sum = 0.0
    l1_sum = 0.0
    iou_sum = 0.0
    for prob, pred_box, gt_box in matched:
        cls_sum += focal_cls_loss(float(prob), alpha, gamma)
        l1_sum += l1_box_cost(pred_box, gt_box, image_w, image_h, include_angle)
        iou_sum += iou_box_cost(pred_box, gt_box)
    n = float(num_objects_in_batch)
    cls_loss = cls_sum / n
    l1_loss = l1_sum / n
    iou_loss = iou_sum / n
    total = (weights.lambda_cls * cls_loss
             + weights.lambda_l1 * l1_loss
             + weights.lambda_iou * iou_loss)
    return LossBreakdown(cls_loss=cls_loss, l1_loss=l1_loss,
                         iou_loss=iou_loss, total=total)
