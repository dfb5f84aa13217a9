"""Rotated-AP50 evaluation with inshore/offshore scene splits.

Matching is greedy in score order: each detection takes the free ground
truth with the highest IoU at or above the threshold. Precision is
TP / detections-so-far and recall is TP / total ground truths; AP integrates
the precision envelope over recall (all-points by default, 11-point by
flag).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import ValidationError
from .types import Detection, GroundTruthRecord, Scene

ALL_POINTS = "all_points"
ELEVEN_POINT = "eleven_point"
METHODS = (ALL_POINTS, ELEVEN_POINT)

# Published Sparse R-CNN OBB results on RSDD-SAR, carried in reports for
# side-by-side context (percent AP50: overall / inshore / offshore).
REFERENCE_AP50 = 91.82
REFERENCE_AP50_INSHORE = 66.27
REFERENCE_AP50_OFFSHORE = 96.26


@dataclass(frozen=True)
class EvalCounts:
    n_tp: int = 0
    n_gt: int = 0
    n_det: int = 0

    def __post_init__(self):
        if min(self.n_tp, self.n_gt, self.n_det) < 0:
            raise ValidationError("counts must be non-negative")
        if self.n_tp > self.n_gt or self.n_tp > self.n_det:
            raise ValidationError(
                f"n_tp={self.n_tp} exceeds n_gt={self.n_gt} or n_det={self.n_det}"
            )


@dataclass(frozen=True)
class PRCurve:
    """(recall, precision) after each ranked detection, best score first."""

    points: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        pts = tuple((float(r), float(p)) for r, p in self.points)
        object.__setattr__(self, "points", pts)
        last_r = 0.0
        for r, p in pts:
            if r < last_r:
                raise ValidationError("recall must be non-decreasing")
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"precision out of range: {p!r}")
            last_r = r


@dataclass(frozen=True)
class SplitEval:
    """One split's AP, counts, and curve."""

    ap: float
    counts: EvalCounts
    curve: PRCurve


@dataclass(frozen=True)
class EvalReport:
    overall: SplitEval
    inshore: SplitEval
    offshore: SplitEval

    @property
    def ap50(self) -> float:
        return self.overall.ap

    @property
    def ap50_inshore(self) -> float:
        return self.inshore.ap

    @property
    def ap50_offshore(self) -> float:
        return self.offshore.ap


def match_detections(dets, gts, iou_thresh: float = 0.5) -> list[bool]:
    """Greedy TP/FP flags, one per detection in *input* order.

    Detections are processed by descending score (ties keep input order);
    each can claim one unmatched ground truth with IoU >= iou_thresh.
    """
    dets = list(dets)
    gts = list(gts)
    flags = [False] * len(dets)
    if not dets or not gts:
        return flags
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    iou = geometry.iou_matrix(
        [dets[i].box for i in order], [g.box for g in gts]
    )
    taken = [False] * len(gts)
    for rank, det_idx in enumerate(order):
        best_j = -1
        best_iou = 0.0
        for j in range(len(gts)):
            if taken[j]:
                continue
            v = iou[rank, j]
            if v > best_iou:
                best_iou = v
                best_j = j
        if best_j >= 0 and best_iou >= iou_thresh:
            taken[best_j] = True
            flags[det_idx] = True
    return flags


def pr_curve(flags, n_gt_total: int) -> PRCurve:
    """Cumulative precision/recall over score-ranked TP/FP flags."""
    if n_gt_total < 0:
        raise ValidationError("n_gt_total must be >= 0")
    if n_gt_total == 0:
        return PRCurve()
    points = []
    tp = 0
    for k, is_tp in enumerate(flags, start=1):
        if is_tp:
            tp += 1
        points.append((tp / n_gt_total, tp / k))
    return PRCurve(tuple(points))


def average_precision(curve: PRCurve, method: str = ALL_POINTS) -> float:
    """Area under the precision envelope of the PR curve."""
    if method not in METHODS:
        raise ValidationError(f"unknown AP method {method!r}")
    if not curve.points:
        return 0.0
    rec = np.array([r for r, _ in curve.points])
    prec = np.array([p for _, p in curve.points])
    if method == ELEVEN_POINT:
        ap = 0.0
        for t in np.linspace(0.0, 1.0, 11):
            mask = rec >= t
            ap += float(prec[mask].max()) if mask.any() else 0.0
        return ap / 11.0
    mrec = np.concatenate(([0.0], rec, [1.0]))
    mpre = np.concatenate(([0.0], prec, [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    idx = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[idx + 1] - mrec[idx]) * mpre[idx + 1]))


def _rank_detections(dets_by_image):
    """Global ranking: score desc, then image_id, then per-image order."""
    ranked = []
    for image_id in sorted(dets_by_image):
        for k, det in enumerate(dets_by_image[image_id]):
            ranked.append((-det.score, image_id, k, det))
    ranked.sort(key=lambda t: t[:3])
    return ranked


def _eval_split(gts_by_image, dets_by_image, image_ids, iou_thresh, method):
    n_gt = sum(len(gts_by_image.get(i, ())) for i in image_ids)
    flags_by_image = {}
    for image_id in image_ids:
        dets = dets_by_image.get(image_id, [])
        flags_by_image[image_id] = match_detections(
            dets, gts_by_image.get(image_id, []), iou_thresh
        )
    ranked = _rank_detections(
        {i: dets_by_image.get(i, []) for i in image_ids}
    )
    ranked_flags = [
        flags_by_image[image_id][k] for _, image_id, k, _ in ranked
    ]
    n_det = len(ranked_flags)
    n_tp = sum(ranked_flags)
    curve = pr_curve(ranked_flags, n_gt)
    ap = average_precision(curve, method)
    return SplitEval(
        ap=ap, counts=EvalCounts(n_tp=n_tp, n_gt=n_gt, n_det=n_det), curve=curve
    )


def evaluate(gts, preds, iou_thresh: float = 0.5, method: str = ALL_POINTS,
             extra_image_ids=()) -> EvalReport:
    """Full report: overall AP50 plus inshore/offshore splits.

    Prediction image_ids must appear among the ground-truth images (or in
    `extra_image_ids`, which declares images with no ground truth whose
    detections all count as false positives).
    """
    if not 0.0 <= iou_thresh <= 1.0:
        raise ValidationError(f"iou_thresh must be in [0, 1], got {iou_thresh!r}")
    gts_by_image: dict[str, list[GroundTruthRecord]] = {}
    for g in gts:
        gts_by_image.setdefault(g.image_id, []).append(g)
    known = set(gts_by_image) | {str(i) for i in extra_image_ids}
    dets_by_image: dict[str, list[Detection]] = {}
    for d in preds:
        dets_by_image.setdefault(d.image_id, []).append(d)
    unknown = sorted(set(dets_by_image) - known)
    if unknown:
        raise ValidationError(
            "predictions reference unknown image_ids: " + ", ".join(unknown)
        )
    scene_of: dict[str, Scene] = {}
    for image_id, recs in gts_by_image.items():
        scenes = {r.scene for r in recs}
        if len(scenes) > 1:
            raise ValidationError(
                f"image {image_id!r} mixes scene tags: "
                + ", ".join(sorted(s.value for s in scenes))
            )
        scene_of[image_id] = next(iter(scenes))
    all_ids = sorted(known)
    inshore_ids = [i for i in all_ids if scene_of.get(i) is Scene.INSHORE]
    offshore_ids = [i for i in all_ids if scene_of.get(i) is Scene.OFFSHORE]
    return EvalReport(
        overall=_eval_split(gts_by_image, dets_by_image, all_ids,
                            iou_thresh, method),
        inshore=_eval_split(gts_by_image, dets_by_image, inshore_ids,
                            iou_thresh, method),
        offshore=_eval_split(gts_by_image, dets_by_image, offshore_ids,
                             iou_thresh, method),
    )


def render_report(report: EvalReport, iou_thresh: float, method: str) -> str:
    """Machine-parseable key<TAB>value lines."""
    lines = [
        ("ap50", repr(report.ap50)),
        ("ap50_inshore", repr(report.ap50_inshore)),
        ("ap50_offshore", repr(report.ap50_offshore)),
        ("n_tp", report.overall.counts.n_tp),
        ("n_gt", report.overall.counts.n_gt),
        ("n_det", report.overall.counts.n_det),
        ("n_tp_inshore", report.inshore.counts.n_tp),
        ("n_gt_inshore", report.inshore.counts.n_gt),
        ("n_det_inshore", report.inshore.counts.n_det),
        ("n_tp_offshore", report.offshore.counts.n_tp),
        ("n_gt_offshore", report.offshore.counts.n_gt),
        ("n_det_offshore", report.offshore.counts.n_det),
        ("iou_thresh", repr(float(iou_thresh))),
        ("method", method),
        ("reference_ap50_percent", repr(REFERENCE_AP50)),
        ("reference_ap50_inshore_percent", repr(REFERENCE_AP50_INSHORE)),
        ("reference_ap50_offshore_percent", repr(REFERENCE_AP50_OFFSHORE)),
    ]
    return "".join(f"{k}\t{v}\n" for k, v in lines)


def render_pr_table(report: EvalReport) -> str:
    """Gnuplot-friendly PR table: one indexed block per split."""
    blocks = []
    for name, split in (("overall", report.overall),
                        ("inshore", report.inshore),
                        ("offshore", report.offshore)):
        rows = [f"# split: {name}", "# recall\tprecision"]
        for r, p in split.curve.points:
            rows.append(f"{r!r}\t{p!r}")
        blocks.append("\n".join(rows))
    return "\n\n\n".join(blocks) + "\n"
