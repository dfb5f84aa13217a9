"""Line-delimited JSON record formats and the JSON weight/pyramid formats.

Formats:
  *.gt.jsonl    one ground-truth record per line:
                {"image_id", "cx", "cy", "w", "h", "theta", "class_id", "scene"}
  *.pred.jsonl  one detection per line: geometry fields plus "score", no scene
  *.wts.json    {"<param path>": {"shape": [...], "data": [...row-major...]}}
  *.pyr.json    {"image_id", "image_w", "image_h",
                 "levels": [{"stride", "shape": [C, H, W], "data": [...]}]}

Serialization uses float repr, so serialize -> parse is lossless.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ParseError, ValidationError
from .types import Detection, GroundTruthRecord, OrientedBox, WeightStore

_GT_KEYS = {"image_id", "cx", "cy", "w", "h", "theta", "class_id", "scene"}
_PRED_KEYS = {"image_id", "cx", "cy", "w", "h", "theta", "class_id", "score"}


def _iter_lines(source):
    """Yield (lineno, text) from bytes, str, or a file-like object."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    for i, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            yield i, line


def _record_fields(lineno: int, line: str, allowed: set[str]):
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg})", line=lineno) from None
    if not isinstance(obj, dict):
        raise ParseError("record must be a JSON object", line=lineno)
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(
            "unknown fields: " + ", ".join(sorted(unknown)), line=lineno
        )
    missing = allowed - set(obj)
    if missing:
        raise ParseError(
            "missing fields: " + ", ".join(sorted(missing)), line=lineno
        )
    return obj


def _box_from(obj, lineno: int) -> OrientedBox:
    try:
        return OrientedBox(
            float(obj["cx"]), float(obj["cy"]),
            float(obj["w"]), float(obj["h"]), float(obj["theta"]),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), line=lineno) from None


def parse_ground_truth(source) -> list[GroundTruthRecord]:
    records = []
    for lineno, line in _iter_lines(source):
        obj = _record_fields(lineno, line, _GT_KEYS)
        box = _box_from(obj, lineno)
        try:
            rec = GroundTruthRecord(
                box=box,
                class_id=obj["class_id"],
                image_id=str(obj["image_id"]),
                scene=obj["scene"],
            )
        except ValidationError as exc:
            raise ParseError(str(exc), line=lineno) from None
        records.append(rec)
    return records


def parse_predictions(source) -> list[Detection]:
    dets = []
    for lineno, line in _iter_lines(source):
        obj = _record_fields(lineno, line, _PRED_KEYS)
        box = _box_from(obj, lineno)
        try:
            det = Detection(
                box=box,
                score=float(obj["score"]),
                class_id=obj["class_id"],
                image_id=str(obj["image_id"]),
            )
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), line=lineno) from None
        dets.append(det)
    return dets


def _geometry_fields(box: OrientedBox) -> dict:
    return {
        "cx": box.cx, "cy": box.cy, "w": box.w, "h": box.h, "theta": box.theta,
    }


def serialize_ground_truth(records) -> str:
    lines = []
    for rec in records:
        obj = {"image_id": rec.image_id}
        obj.update(_geometry_fields(rec.box))
        obj["class_id"] = rec.class_id
        obj["scene"] = rec.scene.value
        lines.append(json.dumps(obj, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def serialize_predictions(dets) -> str:
    lines = []
    for det in dets:
        obj = {"image_id": det.image_id}
        obj.update(_geometry_fields(det.box))
        obj["class_id"] = det.class_id
        obj["score"] = det.score
        lines.append(json.dumps(obj, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def _load_json_document(source):
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if not isinstance(source, str):
        source = source.read()
        if isinstance(source, bytes):
            source = source.decode("utf-8")
    try:
        return json.loads(source)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON document ({exc.msg})") from None


def _shaped_array(name: str, entry) -> np.ndarray:
    if not isinstance(entry, dict) or "shape" not in entry or "data" not in entry:
        raise ValidationError(f"{name!r}: entry must carry 'shape' and 'data'")
    shape = entry["shape"]
    if not all(isinstance(d, int) and d >= 0 for d in shape):
        raise ValidationError(f"{name!r}: shape must be non-negative ints")
    data = entry["data"]
    n = 1
    for d in shape:
        n *= d
    if len(data) != n:
        raise ValidationError(
            f"{name!r}: shape {list(shape)} wants {n} values, got {len(data)}"
        )
    arr = np.asarray(data, dtype=np.float64).reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name!r}: non-finite value")
    return arr


def load_weights(source, required=None) -> WeightStore:
    doc = _load_json_document(source)
    if not isinstance(doc, dict):
        raise ValidationError("weight file must be a JSON object")
    store = WeightStore()
    for name, entry in doc.items():
        store.put(name, _shaped_array(name, entry))
    if required is not None:
        store.require(required)
    return store


def save_weights(store: WeightStore, fp=None) -> str:
    doc = {
        name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
        for name, arr in sorted(store.items())
    }
    text = json.dumps(doc, separators=(",", ":"))
    if fp is not None:
        fp.write(text)
    return text


def load_feature_map(source):
    """Read a single-level map file: {"stride", "shape": [C,H,W], "data"}."""
    from .roialign import FeatureMap

    doc = _load_json_document(source)
    if not isinstance(doc, dict) or "stride" not in doc:
        raise ValidationError("feature map file must carry 'stride'")
    arr = _shaped_array("map", doc)
    if arr.ndim != 3:
        raise ValidationError("feature map shape must be [C, H, W]")
    return FeatureMap(arr, float(doc["stride"]))


def save_feature_map(fmap, fp=None) -> str:
    doc = {
        "stride": fmap.stride,
        "shape": list(fmap.data.shape),
        "data": fmap.data.ravel().tolist(),
    }
    text = json.dumps(doc, separators=(",", ":"))
    if fp is not None:
        fp.write(text)
    return text


def load_pyramid(source):
    """Read a pyramid file -> (image_id, image_w, image_h, FeaturePyramid)."""
    from .roialign import FeatureMap, FeaturePyramid

    doc = _load_json_document(source)
    for key in ("image_id", "image_w", "image_h", "levels"):
        if key not in doc:
            raise ValidationError(f"pyramid file missing {key!r}")
    w, h = float(doc["image_w"]), float(doc["image_h"])
    if not (w > 0 and h > 0):
        raise ValidationError("image dimensions must be positive")
    levels = []
    for i, entry in enumerate(doc["levels"]):
        arr = _shaped_array(f"levels[{i}]", entry)
        if arr.ndim != 3:
            raise ValidationError(f"levels[{i}]: expected shape [C, H, W]")
        levels.append(FeatureMap(arr, float(entry["stride"])))
    return str(doc["image_id"]), w, h, FeaturePyramid(tuple(levels))


def save_pyramid(image_id, image_w, image_h, pyramid, fp=None) -> str:
    doc = {
        "image_id": str(image_id),
        "image_w": float(image_w),
        "image_h": float(image_h),
        "levels": [
            {
                "stride": level.stride,
                "shape": list(level.data.shape),
                "data": level.data.ravel().tolist(),
            }
            for level in pyramid.levels
        ],
    }
    text = json.dumps(doc, separators=(",", ":"))
    if fp is not None:
        fp.write(text)
    return text
