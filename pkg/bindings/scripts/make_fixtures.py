#!/usr/bin/env python3
"""Generate the cross-boundary equivalence fixtures.

Inputs are random but seeded; expected outputs come straight from the core
library API. JSON carries shortest round-trip decimals, so the JS side sees
bit-identical doubles.
"""

import json
import math
from pathlib import Path

import numpy as np

import obbkit
from obbkit import OrientedBox
from obbkit import boxcode, evaluation, geometry, matching
from obbkit.roialign import FeatureMap, rotated_roi_align
from obbkit.types import Detection, GroundTruthRecord, Scene

OUT_DIR = Path(__file__).resolve().parent.parent / "fixtures"


def random_boxes(rng, n, span=64.0):
    return [
        [
            float(rng.uniform(8, span - 8)),
            float(rng.uniform(8, span - 8)),
            float(rng.uniform(2, span / 3)),
            float(rng.uniform(2, span / 3)),
            float(rng.uniform(-math.pi / 2 * 0.99, math.pi / 2 * 0.99)),
        ]
        for _ in range(n)
    ]


def as_boxes(rows):
    return [OrientedBox(*row) for row in rows]


def iou_fixture(rng):
    a = random_boxes(rng, 100)
    b = random_boxes(rng, 100)
    matrix = geometry.iou_matrix(as_boxes(a), as_boxes(b))
    small_a = random_boxes(rng, 3)
    small_b = random_boxes(rng, 2)
    small = geometry.iou_matrix(as_boxes(small_a), as_boxes(small_b))
    return {
        "a": a, "b": b, "expected": matrix.tolist(),
        "small_a": small_a, "small_b": small_b,
        "small_expected": small.tolist(),
    }


def boxcode_fixture(rng):
    boxes = random_boxes(rng, 50)
    deltas = [
        [
            float(rng.uniform(-0.4, 0.4)), float(rng.uniform(-0.4, 0.4)),
            float(rng.uniform(-0.8, 0.8)), float(rng.uniform(-0.8, 0.8)),
            float(rng.uniform(-0.6, 0.6)),
        ]
        for _ in range(50)
    ]
    targets = random_boxes(rng, 50)
    decoded = {}
    for variant in (boxcode.PAPER_LITERAL, boxcode.ROTATION_MATRIX):
        decoded[variant] = [
            list(boxcode.decode(OrientedBox(*b), boxcode.BoxDeltas(*d),
                                variant).as_tuple())
            for b, d in zip(boxes, deltas)
        ]
    encoded = [
        list(boxcode.encode(OrientedBox(*b), OrientedBox(*t),
                            boxcode.ROTATION_MATRIX).as_tuple())
        for b, t in zip(boxes, targets)
    ]
    singular_boxes = [
        [10.0, 10.0, 8.0, 4.0, -math.pi / 4],
        [30.0, 30.0, 8.0, 4.0, 0.2],
        [50.0, 50.0, 8.0, 4.0, math.pi / 4],
    ]
    singular_targets = [[12.0, 12.0, 8.0, 4.0, 0.0]] * 3
    return {
        "boxes": boxes, "deltas": deltas, "targets": targets,
        "decoded_paper_literal": decoded[boxcode.PAPER_LITERAL],
        "decoded_rotation_matrix": decoded[boxcode.ROTATION_MATRIX],
        "encoded_rotation_matrix": encoded,
        "singular_boxes": singular_boxes,
        "singular_targets": singular_targets,
        "singular_rows": [0, 2],
    }


def match_fixture(rng):
    pred_rows = random_boxes(rng, 6, span=512.0)
    probs = [float(v) for v in rng.uniform(0.05, 0.95, 6)]
    gt_rows = random_boxes(rng, 4, span=512.0)
    # defaults on purpose: the bindings must observe (2.0, 5.0, 2.0)
    result = matching.match_sets(as_boxes(pred_rows), probs, as_boxes(gt_rows),
                                 image_w=512.0, image_h=512.0)
    return {
        "pred_boxes": pred_rows,
        "pred_probs": probs,
        "gt_boxes": gt_rows,
        "image_w": 512.0,
        "image_h": 512.0,
        "lambda_defaults": [matching.DEFAULT_LAMBDA_CLS,
                            matching.DEFAULT_LAMBDA_L1,
                            matching.DEFAULT_LAMBDA_IOU],
        "expected_pairs": [
            {
                "predIndex": i, "gtIndex": j,
                "clsCost": pc.cls, "l1Cost": pc.l1, "iouCost": pc.iou,
                "total": pc.total,
            }
            for (i, j), pc in zip(result.pairs, result.pair_costs)
        ],
    }


def roialign_fixture(rng):
    data = (rng.integers(-1000, 1001, size=(3, 10, 12)) / 1000.0)
    stride = 4.0
    fmap = FeatureMap(data, stride)
    boxes = [
        [
            float(rng.uniform(10, 38)), float(rng.uniform(10, 30)),
            float(rng.uniform(6, 20)), float(rng.uniform(6, 16)),
            float(rng.uniform(-math.pi / 2 * 0.99, math.pi / 2 * 0.99)),
        ]
        for _ in range(5)
    ]
    pooled = [
        rotated_roi_align(fmap, OrientedBox(*row), 3, 4, 2).tolist()
        for row in boxes
    ]
    return {
        "stride": stride,
        "map": data.tolist(),
        "boxes": boxes,
        "out_h": 3, "out_w": 4, "sampling_ratio": 2,
        "expected": pooled,
    }


def evaluate_fixture(rng):
    gts, preds = [], []
    records, dets = [], []
    for i in range(8):
        scene = ("inshore", "offshore")[i % 2]
        box = [10.0 + 5 * i, 12.0, 4.0, 3.0, 0.25]
        gts.append({"box": box, "imageId": f"im{i}", "scene": scene})
        records.append(GroundTruthRecord(
            box=OrientedBox(*box), class_id=0, image_id=f"im{i}",
            scene=Scene(scene),
        ))
        hit = i % 3 != 2
        score = 0.9 - 0.05 * i
        pbox = list(box) if hit else [box[0] + 25, box[1] + 25, 4.0, 3.0, 0.25]
        preds.append({"box": pbox, "score": score, "imageId": f"im{i}"})
        dets.append(Detection(box=OrientedBox(*pbox), score=score,
                              class_id=0, image_id=f"im{i}"))
    report = evaluation.evaluate(records, dets)
    return {
        "gts": gts,
        "preds": preds,
        "expected": {
            "ap50": report.ap50,
            "ap50Inshore": report.ap50_inshore,
            "ap50Offshore": report.ap50_offshore,
            "overall": {"nTp": report.overall.counts.n_tp,
                        "nGt": report.overall.counts.n_gt,
                        "nDet": report.overall.counts.n_det},
            "inshore": {"nTp": report.inshore.counts.n_tp,
                        "nGt": report.inshore.counts.n_gt,
                        "nDet": report.inshore.counts.n_det},
            "offshore": {"nTp": report.offshore.counts.n_tp,
                         "nGt": report.offshore.counts.n_gt,
                         "nDet": report.offshore.counts.n_det},
        },
    }


def main():
    OUT_DIR.mkdir(exist_ok=True)
    rng = np.random.default_rng(424242)
    fixtures = {
        "iou.json": iou_fixture(rng),
        "boxcode.json": boxcode_fixture(rng),
        "match.json": match_fixture(rng),
        "roialign.json": roialign_fixture(rng),
        "evaluate.json": evaluate_fixture(rng),
        "version.json": {"version": obbkit.__version__},
    }
    for name, doc in fixtures.items():
        (OUT_DIR / name).write_text(json.dumps(doc), encoding="utf-8")
        print(f"wrote fixtures/{name}")


if __name__ == "__main__":
    main()
