"""Forward-only inference: proposals -> pooled RoI features -> dynamic-head
stack -> class/box heads -> decoded detections. No NMS, no thresholding.

Weight schema (per stage s in 0..5, feature width C = 256, delta width 5):

    stage{s}.param_gen.weight   (2*C*D, C)    D = interaction width
    stage{s}.param_gen.bias     (2*C*D,)
    stage{s}.proj.weight        (C, C*P*P)    P = pooling size
    stage{s}.proj.bias          (C,)
    stage{s}.cls.weight         (1, C)
    stage{s}.cls.bias           (1,)
    stage{s}.reg.{k}.weight     chained C -> ... -> 5, ReLU between layers
    stage{s}.reg.{k}.bias

The generated parameters split into kernel1 = params[:C*D] reshaped (C, D)
and kernel2 = params[C*D:] reshaped (D, C), applied to the (P*P, C) pooled
grid with ReLU after each, then flattened and projected back to C.

The documented default shape is D = 64 and P = 7; both are derived from the
stored array shapes, so desk-scale models may shrink them.

Every per-proposal linear map runs as a batched per-slice matmul, which
keeps rows bit-identical regardless of how many proposals are in flight
(one fused GEMM does not guarantee that).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import boxcode, roialign
from .boxcode import PAPER_LITERAL, PROPOSAL_FEATURE_DIM, BoxDeltas
from .errors import ValidationError
from .roialign import FeaturePyramid
from .types import OrientedBox, WeightStore

NUM_STAGES = 6
DELTA_DIM = 5
DEFAULT_SAMPLING_RATIO = 2
DEFAULT_CANONICAL_LEVEL = 4
DEFAULT_CANONICAL_SIZE = 224.0


@dataclass(eq=False)
class DynamicHeadWeights:
    """One refinement stage's parameters."""

    param_gen_w: np.ndarray
    param_gen_b: np.ndarray
    proj_w: np.ndarray
    proj_b: np.ndarray
    cls_w: np.ndarray
    cls_b: np.ndarray
    reg_layers: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        c = PROPOSAL_FEATURE_DIM
        pg_out, pg_in = self.param_gen_w.shape
        if pg_in != c or pg_out % (2 * c) != 0 or pg_out == 0:
            raise ValidationError(
                f"param_gen.weight must be (2*{c}*D, {c}), got {self.param_gen_w.shape}"
            )
        if self.param_gen_b.shape != (pg_out,):
            raise ValidationError("param_gen.bias shape mismatch")
        proj_out, proj_in = self.proj_w.shape
        if proj_out != c or proj_in % c != 0:
            raise ValidationError(
                f"proj.weight must be ({c}, {c}*P*P), got {self.proj_w.shape}"
            )
        p2 = proj_in // c
        p = math.isqrt(p2)
        if p * p != p2:
            raise ValidationError(
                f"proj.weight input {proj_in} is not {c} * square"
            )
        if self.proj_b.shape != (proj_out,):
            raise ValidationError("proj.bias shape mismatch")
        if self.cls_w.shape != (1, c) or self.cls_b.shape != (1,):
            raise ValidationError("cls head must map 256 -> 1")
        if not self.reg_layers:
            raise ValidationError("regression stack is empty")
        prev = c
        for k, (w, b) in enumerate(self.reg_layers):
            if w.ndim != 2 or w.shape[1] != prev or b.shape != (w.shape[0],):
                raise ValidationError(f"reg layer {k} shape mismatch: {w.shape}")
            prev = w.shape[0]
        if prev != DELTA_DIM:
            raise ValidationError(
                f"regression stack must end in {DELTA_DIM} deltas, got {prev}"
            )

    @property
    def interaction_dim(self) -> int:
        return self.param_gen_w.shape[0] // (2 * PROPOSAL_FEATURE_DIM)

    @property
    def pool_size(self) -> int:
        return math.isqrt(self.proj_w.shape[1] // PROPOSAL_FEATURE_DIM)

    @classmethod
    def from_store(cls, store: WeightStore, stage: int) -> "DynamicHeadWeights":
        prefix = f"stage{stage}."
        base = ("param_gen.weight", "param_gen.bias", "proj.weight",
                "proj.bias", "cls.weight", "cls.bias",
                "reg.0.weight", "reg.0.bias")
        store.require(prefix + name for name in base)
        reg_layers = []
        k = 0
        while prefix + f"reg.{k}.weight" in store:
            store.require([prefix + f"reg.{k}.bias"])
            reg_layers.append(
                (store[prefix + f"reg.{k}.weight"], store[prefix + f"reg.{k}.bias"])
            )
            k += 1
        return cls(
            param_gen_w=store[prefix + "param_gen.weight"],
            param_gen_b=store[prefix + "param_gen.bias"],
            proj_w=store[prefix + "proj.weight"],
            proj_b=store[prefix + "proj.bias"],
            cls_w=store[prefix + "cls.weight"],
            cls_b=store[prefix + "cls.bias"],
            reg_layers=tuple(reg_layers),
        )


@dataclass(eq=False)
class DetectionBatch:
    """Final per-proposal boxes, scores, and refined object features."""

    boxes: tuple[OrientedBox, ...]
    scores: np.ndarray
    features: np.ndarray

    def __post_init__(self):
        self.boxes = tuple(self.boxes)
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.features = np.asarray(self.features, dtype=np.float64)
        n = len(self.boxes)
        if self.scores.shape != (n,) or self.features.shape[0] != n:
            raise ValidationError("boxes, scores, and features disagree on count")

    def __len__(self) -> int:
        return len(self.boxes)


def _rowwise_affine(w: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """y[i] = w @ x[i] + b, one GEMM per row for bit-stable rows."""
    return np.matmul(w[None, :, :], x[:, :, None])[:, :, 0] + b


def dynamic_head_forward(proposal_features: np.ndarray,
                         roi_features: np.ndarray,
                         w: DynamicHeadWeights) -> np.ndarray:
    """Per-proposal interaction of proposal features with pooled features.

    proposal_features: (n, 256); roi_features: (n, P*P, 256) -> (n, 256).
    """
    c = PROPOSAL_FEATURE_DIM
    pf = np.asarray(proposal_features, dtype=np.float64)
    roi = np.asarray(roi_features, dtype=np.float64)
    if pf.ndim != 2 or pf.shape[1] != c:
        raise ValidationError(f"proposal features must be (n, {c}), got {pf.shape}")
    n = pf.shape[0]
    if n < 1:
        raise ValidationError("need at least one proposal")
    p2 = w.proj_w.shape[1] // c
    if roi.shape != (n, p2, c):
        raise ValidationError(
            f"roi features must be ({n}, {p2}, {c}), got {roi.shape}"
        )
    d = w.interaction_dim
    params = _rowwise_affine(w.param_gen_w, w.param_gen_b, pf)
    k1 = params[:, : c * d].reshape(n, c, d)
    k2 = params[:, c * d:].reshape(n, d, c)
    h1 = np.maximum(np.matmul(roi, k1), 0.0)
    h2 = np.maximum(np.matmul(h1, k2), 0.0)
    flat = h2.reshape(n, p2 * c)
    return _rowwise_affine(w.proj_w, w.proj_b, flat)


def predict_heads(object_features: np.ndarray,
                  w: DynamicHeadWeights) -> tuple[np.ndarray, np.ndarray]:
    """Class logits (n, 1) and box deltas (n, 5) from object features."""
    x = np.asarray(object_features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != PROPOSAL_FEATURE_DIM:
        raise ValidationError(
            f"object features must be (n, {PROPOSAL_FEATURE_DIM}), got {x.shape}"
        )
    logits = _rowwise_affine(w.cls_w, w.cls_b, x)
    deltas = x
    last = len(w.reg_layers) - 1
    for k, (lw, lb) in enumerate(w.reg_layers):
        deltas = _rowwise_affine(lw, lb, deltas)
        if k != last:
            deltas = np.maximum(deltas, 0.0)
    return logits, deltas


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def load_stage_weights(store: WeightStore,
                       num_stages: int = NUM_STAGES) -> tuple[DynamicHeadWeights, ...]:
    """All refinement stages from a weight store; shapes must agree."""
    stages = tuple(
        DynamicHeadWeights.from_store(store, s) for s in range(num_stages)
    )
    pools = {w.pool_size for w in stages}
    if len(pools) != 1:
        raise ValidationError(f"stages disagree on pooling size: {sorted(pools)}")
    return stages


def run_inference(pyramid: FeaturePyramid, image_w: float, image_h: float,
                  weights: WeightStore, n_proposals: int,
                  decode_variant: str = PAPER_LITERAL,
                  sampling_ratio: int = DEFAULT_SAMPLING_RATIO,
                  single_level: int | None = None,
                  stage_hook=None) -> DetectionBatch:
    """Run the full refinement stack and return one detection per proposal.

    `stage_hook(stage_index, boxes, logits)` is called after each stage.
    """
    stages = load_stage_weights(weights)
    pool = stages[0].pool_size
    proposals = boxcode.init_proposals(n_proposals, image_w, image_h)
    boxes = list(proposals.boxes)
    feats = proposals.features
    num_levels = len(pyramid.levels)
    if single_level is not None and not 0 <= single_level < num_levels:
        raise ValidationError(f"single_level out of range: {single_level}")
    logits = None
    for s, w in enumerate(stages):
        rois = np.empty((len(boxes), pool * pool, pyramid.channels))
        for i, box in enumerate(boxes):
            if single_level is None:
                level = roialign.assign_fpn_level(
                    box, num_levels, DEFAULT_CANONICAL_LEVEL,
                    DEFAULT_CANONICAL_SIZE,
                )
            else:
                level = single_level
            pooled = roialign.rotated_roi_align(
                pyramid.levels[level], box, pool, pool, sampling_ratio
            )
            rois[i] = pooled.reshape(pyramid.channels, pool * pool).T
        obj = dynamic_head_forward(feats, rois, w)
        logits, deltas = predict_heads(obj, w)
        boxes = [
            boxcode.decode(boxes[i], BoxDeltas(*deltas[i]), decode_variant)
            for i in range(len(boxes))
        ]
        feats = obj
        if stage_hook is not None:
            stage_hook(s, tuple(boxes), logits)
    scores = _sigmoid(logits[:, 0])
    return DetectionBatch(boxes=tuple(boxes), scores=scores, features=feats)
