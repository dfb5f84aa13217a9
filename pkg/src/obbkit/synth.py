"""Seeded synthetic fixtures: ground truth, predictions, pyramids, weights.

Weight values are 3-decimal multiples (k/1000) so the JSON files stay small
and byte-stable across runs.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ValidationError
from .pipeline import DELTA_DIM, NUM_STAGES
from .boxcode import PROPOSAL_FEATURE_DIM
from .roialign import FeatureMap, FeaturePyramid
from .types import Detection, GroundTruthRecord, OrientedBox, Scene, WeightStore

DEFAULT_INTERACTION_DIM = 2
DEFAULT_POOL_SIZE = 2
FULL_INTERACTION_DIM = 64
FULL_POOL_SIZE = 7


def random_box(rng: np.random.Generator, image_w: float,
               image_h: float) -> OrientedBox:
    """A box comfortably inside the image."""
    w = float(rng.uniform(image_w / 16.0, image_w / 4.0))
    h = float(rng.uniform(image_h / 16.0, image_h / 4.0))
    margin = 0.5 * math.hypot(w, h)
    cx = float(rng.uniform(margin, image_w - margin))
    cy = float(rng.uniform(margin, image_h - margin))
    theta = float(rng.uniform(-math.pi / 2.0, math.pi / 2.0))
    return OrientedBox(cx, cy, w, h, theta)


def make_ground_truth(seed: int, n_images: int, boxes_per_image: int,
                      image_w: float, image_h: float) -> list[GroundTruthRecord]:
    """Deterministic scene-tagged records; images alternate inshore/offshore."""
    if n_images < 0 or boxes_per_image < 0:
        raise ValidationError("counts must be non-negative")
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n_images):
        image_id = f"img{i:04d}"
        scene = Scene.INSHORE if i % 2 == 0 else Scene.OFFSHORE
        for _ in range(boxes_per_image):
            records.append(GroundTruthRecord(
                box=random_box(rng, image_w, image_h),
                class_id=0, image_id=image_id, scene=scene,
            ))
    return records


def predictions_from_ground_truth(records, score: float = 1.0) -> list[Detection]:
    return [
        Detection(box=r.box, score=score, class_id=r.class_id,
                  image_id=r.image_id)
        for r in records
    ]


def _grid(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.integers(-1000, 1001, size=shape).astype(np.float64) / 1000.0


def make_pyramid(seed: int, image_w: int, image_h: int,
                 base_stride: int = 4, n_levels: int = 4) -> FeaturePyramid:
    """Random 256-channel pyramid with strides base_stride * 2**k."""
    rng = np.random.default_rng(seed)
    levels = []
    stride = base_stride
    for _ in range(n_levels):
        h = max(1, int(image_h) // stride)
        w = max(1, int(image_w) // stride)
        levels.append(FeatureMap(_grid(rng, (PROPOSAL_FEATURE_DIM, h, w)),
                                 float(stride)))
        stride *= 2
    return FeaturePyramid(tuple(levels))


def make_weights(seed: int, interaction_dim: int = DEFAULT_INTERACTION_DIM,
                 pool_size: int = DEFAULT_POOL_SIZE, reg_layers: int = 1,
                 num_stages: int = NUM_STAGES,
                 scale: float = 0.05) -> WeightStore:
    """Random dynamic-head weights in the documented schema."""
    if interaction_dim < 1 or pool_size < 1 or reg_layers < 1:
        raise ValidationError("interaction_dim, pool_size, reg_layers must be >= 1")
    rng = np.random.default_rng(seed)
    c = PROPOSAL_FEATURE_DIM
    d = interaction_dim
    p2 = pool_size * pool_size
    store = WeightStore()
    span = max(1, int(round(scale * 1000.0)))

    def rand(shape):
        return rng.integers(-span, span + 1, size=shape).astype(np.float64) / 1000.0

    for s in range(num_stages):
        prefix = f"stage{s}."
        store.put(prefix + "param_gen.weight", rand((2 * c * d, c)))
        store.put(prefix + "param_gen.bias", rand((2 * c * d,)))
        store.put(prefix + "proj.weight", rand((c, c * p2)))
        store.put(prefix + "proj.bias", rand((c,)))
        store.put(prefix + "cls.weight", rand((1, c)))
        store.put(prefix + "cls.bias", rand((1,)))
        dims = [c] * reg_layers + [DELTA_DIM]
        for k in range(reg_layers):
            store.put(prefix + f"reg.{k}.weight", rand((dims[k + 1], dims[k])))
            store.put(prefix + f"reg.{k}.bias", rand((dims[k + 1],)))
    return store
