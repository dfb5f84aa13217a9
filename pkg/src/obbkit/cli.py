"""Command-line interface.

Subcommands: eval, iou, match, infer, synth, decode, encode, roialign.
Data goes to stdout (or --out files) as key<TAB>value lines, TSV matrices,
or the JSONL record formats; diagnostics go to stderr. Exit codes: 0 ok,
2 input/validation error, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, boxcode, evaluation, fileio, matching, pipeline, synth
from .errors import ParseError, SingularTransformError, ValidationError
from .types import Detection, OrientedBox

_VARIANT_BY_FLAG = {
    "paper-literal": boxcode.PAPER_LITERAL,
    "rotation-matrix": boxcode.ROTATION_MATRIX,
}
_METHOD_BY_FLAG = {
    "all-points": evaluation.ALL_POINTS,
    "eleven-point": evaluation.ELEVEN_POINT,
}


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _parse_inline_box(spec: str) -> OrientedBox:
    parts = spec.split(",")
    if len(parts) != 5:
        raise ValidationError(
            f"box must be 'cx,cy,w,h,theta' (5 values), got {spec!r}"
        )
    return OrientedBox(*(float(p) for p in parts))


def _read_tsv_matrix(path: str, columns: int) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != columns:
            raise ParseError(
                f"expected {columns} tab-separated values, got {len(parts)}",
                line=lineno,
            )
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
    return np.asarray(rows, dtype=np.float64).reshape(-1, columns)


def _format_tsv_rows(rows) -> str:
    return "".join("\t".join(repr(float(v)) for v in row) + "\n" for row in rows)


def _load_boxes_arg(args, side: str) -> list[OrientedBox]:
    inline = getattr(args, f"box_{side}")
    path = getattr(args, f"file_{side}")
    if inline and path:
        raise ValidationError(f"give either --box-{side} or --file-{side}, not both")
    if inline:
        return [_parse_inline_box(s) for s in inline]
    if path:
        return [OrientedBox(*row) for row in _read_tsv_matrix(path, 5)]
    raise ValidationError(f"missing --box-{side} or --file-{side}")


def cmd_eval(args) -> int:
    gts = fileio.parse_ground_truth(_read_text(args.gt))
    preds = fileio.parse_predictions(_read_text(args.pred))
    method = _METHOD_BY_FLAG[args.method]
    report = evaluation.evaluate(gts, preds, iou_thresh=args.iou_thresh,
                                 method=method)
    text = evaluation.render_report(report, args.iou_thresh, method)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    if args.pr_out:
        Path(args.pr_out).write_text(evaluation.render_pr_table(report),
                                     encoding="utf-8")
    return 0


def cmd_iou(args) -> int:
    from . import geometry

    boxes_a = _load_boxes_arg(args, "a")
    boxes_b = _load_boxes_arg(args, "b")
    matrix = geometry.iou_matrix(boxes_a, boxes_b)
    sys.stdout.write(_format_tsv_rows(matrix))
    return 0


def cmd_match(args) -> int:
    gts = fileio.parse_ground_truth(_read_text(args.gt))
    preds = fileio.parse_predictions(_read_text(args.pred))
    weights = matching.MatchWeights(args.lambda_cls, args.lambda_l1,
                                    args.lambda_iou)
    gt_by_image: dict[str, list] = {}
    for g in gts:
        gt_by_image.setdefault(g.image_id, []).append(g)
    pred_by_image: dict[str, list] = {}
    for p in preds:
        pred_by_image.setdefault(p.image_id, []).append(p)
    for image_id in sorted(set(gt_by_image) | set(pred_by_image)):
        img_preds = pred_by_image.get(image_id, [])
        img_gts = gt_by_image.get(image_id, [])
        result = matching.match_sets(
            [p.box for p in img_preds], [p.score for p in img_preds],
            [g.box for g in img_gts], weights,
            image_w=args.image_w, image_h=args.image_h,
            alpha=args.focal_alpha, gamma=args.focal_gamma,
        )
        for (i, j), cost in zip(result.pairs, result.pair_costs):
            sys.stdout.write(
                f"{image_id}\t{i}\t{j}\t{cost.cls!r}\t{cost.l1!r}"
                f"\t{cost.iou!r}\t{cost.total!r}\n"
            )
        sys.stderr.write(f"{image_id}\ttotal\t{result.total_cost!r}\n")
    return 0


def cmd_infer(args) -> int:
    if not 0.0 <= args.score_thresh <= 1.0:
        raise ValidationError(
            f"--score-thresh must be in [0, 1], got {args.score_thresh!r}"
        )
    store = fileio.load_weights(_read_text(args.weights))
    detections = []
    per_image = []
    for path in args.pyramid:
        image_id, image_w, image_h, pyr = fileio.load_pyramid(_read_text(path))
        batch = pipeline.run_inference(
            pyr, image_w, image_h, store, args.proposals,
            decode_variant=_VARIANT_BY_FLAG[args.decode],
            single_level=args.single_level,
        )
        per_image.append((image_id, batch))
    for image_id, batch in sorted(per_image, key=lambda t: t[0]):
        for box, score in zip(batch.boxes, batch.scores):
            if score >= args.score_thresh:
                detections.append(
                    Detection(box=box, score=float(score),
                              class_id=0, image_id=image_id)
                )
    Path(args.out).write_text(fileio.serialize_predictions(detections),
                              encoding="utf-8")
    sys.stderr.write(f"wrote {len(detections)} detections to {args.out}\n")
    return 0


def cmd_synth(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gts = synth.make_ground_truth(args.seed, args.images, args.boxes_per_image,
                                  args.image_size, args.image_size)
    preds = synth.predictions_from_ground_truth(gts)
    gt_path = out_dir / "synthetic.gt.jsonl"
    pred_path = out_dir / "synthetic.pred.jsonl"
    gt_path.write_text(fileio.serialize_ground_truth(gts), encoding="utf-8")
    pred_path.write_text(fileio.serialize_predictions(preds), encoding="utf-8")
    sys.stdout.write(f"gt\t{gt_path}\n")
    sys.stdout.write(f"pred\t{pred_path}\n")
    image_ids = sorted({g.image_id for g in gts})
    if args.with_pyramids:
        for k, image_id in enumerate(image_ids):
            pyr = synth.make_pyramid(args.seed + 1 + k, args.image_size,
                                     args.image_size)
            path = out_dir / f"{image_id}.pyr.json"
            with path.open("w", encoding="utf-8") as fp:
                fileio.save_pyramid(image_id, args.image_size,
                                    args.image_size, pyr, fp)
            sys.stdout.write(f"pyramid\t{path}\n")
    if args.with_weights:
        store = synth.make_weights(args.seed, args.interaction_dim,
                                   args.pool_size, args.reg_layers)
        path = out_dir / "synthetic.wts.json"
        with path.open("w", encoding="utf-8") as fp:
            fileio.save_weights(store, fp)
        sys.stdout.write(f"weights\t{path}\n")
    return 0


def cmd_decode(args) -> int:
    boxes = _read_tsv_matrix(args.boxes, 5)
    deltas = _read_tsv_matrix(args.deltas, 5)
    if boxes.shape[0] != deltas.shape[0]:
        raise ValidationError(
            f"{boxes.shape[0]} boxes vs {deltas.shape[0]} delta rows"
        )
    variant = _VARIANT_BY_FLAG[args.decode]
    out = []
    for row, drow in zip(boxes, deltas):
        decoded = boxcode.decode(OrientedBox(*row), boxcode.BoxDeltas(*drow),
                                 variant)
        out.append(decoded.as_tuple())
    sys.stdout.write(_format_tsv_rows(out))
    return 0


def cmd_encode(args) -> int:
    boxes = _read_tsv_matrix(args.boxes, 5)
    targets = _read_tsv_matrix(args.targets, 5)
    if boxes.shape[0] != targets.shape[0]:
        raise ValidationError(
            f"{boxes.shape[0]} boxes vs {targets.shape[0]} target rows"
        )
    variant = _VARIANT_BY_FLAG[args.decode]
    out = []
    singular = []
    for idx, (row, trow) in enumerate(zip(boxes, targets)):
        try:
            deltas = boxcode.encode(OrientedBox(*row), OrientedBox(*trow),
                                    variant)
        except SingularTransformError:
            singular.append(idx)
            continue
        out.append(deltas.as_tuple())
    if singular:
        raise SingularTransformError(
            "singular rows: " + ",".join(str(i) for i in singular),
            rows=singular,
        )
    sys.stdout.write(_format_tsv_rows(out))
    return 0


def cmd_roialign(args) -> int:
    from .roialign import rotated_roi_align

    if (args.map is None) == (args.pyramid is None):
        raise ValidationError("give exactly one of --map or --pyramid")
    if args.map is not None:
        fmap = fileio.load_feature_map(_read_text(args.map))
    else:
        _, _, _, pyr = fileio.load_pyramid(_read_text(args.pyramid))
        if not 0 <= args.level < len(pyr.levels):
            raise ValidationError(f"--level out of range: {args.level}")
        fmap = pyr.levels[args.level]
    boxes = [OrientedBox(*row) for row in _read_tsv_matrix(args.boxes, 5)]
    grids = [
        rotated_roi_align(fmap, box, args.out_h, args.out_w,
                          args.sampling_ratio)
        for box in boxes
    ]
    stacked = (np.stack(grids) if grids
               else np.zeros((0, fmap.channels, args.out_h, args.out_w)))
    doc = {"shape": list(stacked.shape), "data": stacked.ravel().tolist()}
    sys.stdout.write(json.dumps(doc, separators=(",", ":")) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obbkit",
        description="Oriented-box geometry, matching, inference, and "
                    "AP50 evaluation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="AP50 report from gt + predictions")
    p_eval.add_argument("--gt", required=True)
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--iou-thresh", type=float, default=0.5)
    p_eval.add_argument("--method", choices=sorted(_METHOD_BY_FLAG),
                        default="all-points")
    p_eval.add_argument("--out", default=None,
                        help="also write the report to this file")
    p_eval.add_argument("--pr-out", default=None,
                        help="write a gnuplot-ready PR table here")
    p_eval.set_defaults(func=cmd_eval)

    p_iou = sub.add_parser("iou", help="pairwise rotated IoU matrix (TSV)")
    p_iou.add_argument("--box-a", action="append", default=[],
                       metavar="CX,CY,W,H,THETA")
    p_iou.add_argument("--box-b", action="append", default=[],
                       metavar="CX,CY,W,H,THETA")
    p_iou.add_argument("--file-a", default=None, help="TSV box file (5 cols)")
    p_iou.add_argument("--file-b", default=None, help="TSV box file (5 cols)")
    p_iou.set_defaults(func=cmd_iou)

    p_match = sub.add_parser("match", help="Hungarian assignment per image")
    p_match.add_argument("--gt", required=True)
    p_match.add_argument("--pred", required=True)
    p_match.add_argument("--lambda-cls", type=float,
                         default=matching.DEFAULT_LAMBDA_CLS)
    p_match.add_argument("--lambda-l1", type=float,
                         default=matching.DEFAULT_LAMBDA_L1)
    p_match.add_argument("--lambda-iou", type=float,
                         default=matching.DEFAULT_LAMBDA_IOU)
    p_match.add_argument("--focal-alpha", type=float,
                         default=matching.DEFAULT_FOCAL_ALPHA)
    p_match.add_argument("--focal-gamma", type=float,
                         default=matching.DEFAULT_FOCAL_GAMMA)
    p_match.add_argument("--image-w", type=float, default=512.0)
    p_match.add_argument("--image-h", type=float, default=512.0)
    p_match.set_defaults(func=cmd_match)

    p_infer = sub.add_parser("infer", help="run the refinement stack")
    p_infer.add_argument("--pyramid", action="append", required=True,
                         help="pyramid file; repeat for more images")
    p_infer.add_argument("--weights", required=True)
    p_infer.add_argument("--out", required=True)
    p_infer.add_argument("--proposals", type=int, default=300)
    p_infer.add_argument("--decode", choices=sorted(_VARIANT_BY_FLAG),
                         default="paper-literal")
    p_infer.add_argument("--score-thresh", type=float, default=0.0)
    p_infer.add_argument("--single-level", type=int, default=None,
                         help="pool every proposal from this pyramid index "
                              "instead of the size heuristic")
    p_infer.set_defaults(func=cmd_infer)

    p_synth = sub.add_parser("synth", help="generate seeded fixtures")
    p_synth.add_argument("--out-dir", required=True)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--images", type=int, default=4)
    p_synth.add_argument("--boxes-per-image", type=int, default=3)
    p_synth.add_argument("--image-size", type=int, default=64)
    p_synth.add_argument("--with-pyramids", action="store_true")
    p_synth.add_argument("--with-weights", action="store_true")
    p_synth.add_argument("--interaction-dim", type=int,
                         default=synth.DEFAULT_INTERACTION_DIM)
    p_synth.add_argument("--pool-size", type=int,
                         default=synth.DEFAULT_POOL_SIZE)
    p_synth.add_argument("--reg-layers", type=int, default=1)
    p_synth.set_defaults(func=cmd_synth)

    p_dec = sub.add_parser("decode", help="apply box deltas (TSV in/out)")
    p_dec.add_argument("--boxes", required=True)
    p_dec.add_argument("--deltas", required=True)
    p_dec.add_argument("--decode", choices=sorted(_VARIANT_BY_FLAG),
                       default="paper-literal")
    p_dec.set_defaults(func=cmd_decode)

    p_enc = sub.add_parser("encode", help="invert the delta transform")
    p_enc.add_argument("--boxes", required=True)
    p_enc.add_argument("--targets", required=True)
    p_enc.add_argument("--decode", choices=sorted(_VARIANT_BY_FLAG),
                       default="paper-literal")
    p_enc.set_defaults(func=cmd_encode)

    p_roi = sub.add_parser("roialign", help="pool boxes from a feature grid")
    p_roi.add_argument("--map", default=None,
                       help="single-level map file {stride, shape, data}")
    p_roi.add_argument("--pyramid", default=None)
    p_roi.add_argument("--level", type=int, default=0)
    p_roi.add_argument("--boxes", required=True, help="TSV box file (5 cols)")
    p_roi.add_argument("--out-h", type=int, default=7)
    p_roi.add_argument("--out-w", type=int, default=7)
    p_roi.add_argument("--sampling-ratio", type=int, default=2)
    p_roi.set_defaults(func=cmd_roialign)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ParseError) as exc:
        sys.stderr.write(f"obbkit: error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"obbkit: error: {exc}\n")
        return 2
    except Exception as exc:  # internal failure
        sys.stderr.write(f"obbkit: internal error: {exc}\n")
        return 1


def run() -> None:
    sys.exit(main())
