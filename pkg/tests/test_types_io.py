import io
import json
import math

import numpy as np
import pytest

from obbkit import (
    Detection,
    GroundTruthRecord,
    OrientedBox,
    ParseError,
    Scene,
    ValidationError,
    WeightStore,
    canonicalize_angle,
)
from obbkit import _clip_py, fileio, geometry


def sorted_corners(box):
    return sorted(geometry.corners(box).vertices)


class TestCanonicalizeAngle:
    def test_zero_identity(self):
        assert canonicalize_angle(0.0) == 0.0

    def test_pi_maps_to_zero(self):
        assert canonicalize_angle(math.pi) == 0.0

    def test_three_quarter_pi(self):
        got = canonicalize_angle(3 * math.pi / 4)
        assert got == pytest.approx(-math.pi / 4, abs=1e-15)
        # The two parameterizations describe the same rectangle.
        a = sorted_corners(OrientedBox(2, 3, 4, 2, 3 * math.pi / 4))
        b = sorted_corners(OrientedBox(2, 3, 4, 2, got))
        for (ax, ay), (bx, by) in zip(a, b):
            assert ax == pytest.approx(bx, abs=1e-9)
            assert ay == pytest.approx(by, abs=1e-9)

    def test_half_pi_boundary(self):
        assert canonicalize_angle(math.pi / 2) == math.pi / 2
        assert canonicalize_angle(-math.pi / 2) == math.pi / 2

    def test_idempotent_and_pi_periodic(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            theta = float(rng.uniform(-10, 10))
            k = int(rng.integers(-4, 5))
            canon = canonicalize_angle(theta)
            assert -math.pi / 2 < canon <= math.pi / 2
            assert canonicalize_angle(canon) == canon
            shifted = canonicalize_angle(theta + k * math.pi)
            assert shifted == pytest.approx(canon, abs=1e-12)

    def test_geometry_preserved(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            cx, cy = rng.uniform(-5, 5, 2)
            w, h = rng.uniform(0.5, 9, 2)
            theta = float(rng.uniform(-10, 10))
            raw = sorted(_clip_py.box_corners(cx, cy, w, h, theta))
            canon = sorted_corners(OrientedBox(cx, cy, w, h, theta))
            for (ax, ay), (bx, by) in zip(raw, canon):
                assert ax == pytest.approx(bx, abs=1e-9)
                assert ay == pytest.approx(by, abs=1e-9)

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(ValidationError):
            canonicalize_angle(bad)


class TestOrientedBox:
    def test_stores_canonical_angle(self):
        box = OrientedBox(1, 2, 3, 4, math.pi)
        assert box.theta == 0.0

    @pytest.mark.parametrize("w,h", [(0, 1), (-3, 1), (1, 0), (1, -2)])
    def test_rejects_non_positive_sides(self, w, h):
        with pytest.raises(ValidationError):
            OrientedBox(0, 0, w, h, 0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            OrientedBox(math.nan, 0, 1, 1, 0)

    def test_value_equality(self):
        assert OrientedBox(1, 2, 3, 4, 0.5) == OrientedBox(1, 2, 3, 4, 0.5)


class TestDetection:
    def test_score_range(self):
        box = OrientedBox(0, 0, 1, 1, 0)
        Detection(box=box, score=0.0)
        Detection(box=box, score=1.0)
        with pytest.raises(ValidationError):
            Detection(box=box, score=1.5)
        with pytest.raises(ValidationError):
            Detection(box=box, score=-0.1)


GT_LINE = (
    '{"image_id":"im1","cx":10.0,"cy":12.0,"w":4.0,"h":2.0,'
    '"theta":0.25,"class_id":0,"scene":"inshore"}'
)
PRED_LINE = (
    '{"image_id":"im1","cx":10.0,"cy":12.0,"w":4.0,"h":2.0,'
    '"theta":0.25,"class_id":0,"score":0.9}'
)


class TestGroundTruthParsing:
    def test_single_line(self):
        records = fileio.parse_ground_truth(GT_LINE + "\n")
        assert len(records) == 1
        assert records[0].scene is Scene.INSHORE
        assert records[0].box == OrientedBox(10, 12, 4, 2, 0.25)

    def test_empty_stream(self):
        assert fileio.parse_ground_truth("") == []
        assert fileio.parse_ground_truth(b"") == []

    def test_negative_width_names_line(self):
        bad = GT_LINE.replace('"w":4.0', '"w":-3.0')
        text = GT_LINE + "\n" + bad + "\n"
        with pytest.raises(ParseError) as err:
            fileio.parse_ground_truth(text)
        assert err.value.line == 2
        assert "line 2" in str(err.value)

    def test_malformed_json_names_line(self):
        with pytest.raises(ParseError) as err:
            fileio.parse_ground_truth("{not json}\n")
        assert err.value.line == 1

    def test_unknown_scene_rejected(self):
        bad = GT_LINE.replace("inshore", "harbor")
        with pytest.raises(ParseError):
            fileio.parse_ground_truth(bad)

    def test_unknown_field_rejected(self):
        bad = GT_LINE[:-1] + ',"spam":1}'
        with pytest.raises(ParseError):
            fileio.parse_ground_truth(bad)

    def test_missing_field_rejected(self):
        obj = json.loads(GT_LINE)
        del obj["theta"]
        with pytest.raises(ParseError) as err:
            fileio.parse_ground_truth(json.dumps(obj))
        assert "theta" in str(err.value)

    def test_angles_canonicalized_and_order_preserved(self):
        lines = []
        for k, theta in enumerate([3.0, -2.0, 0.5]):
            obj = json.loads(GT_LINE)
            obj["cx"] = float(k)
            obj["theta"] = theta
            lines.append(json.dumps(obj))
        records = fileio.parse_ground_truth("\n".join(lines))
        assert [r.box.cx for r in records] == [0.0, 1.0, 2.0]
        for rec, theta in zip(records, [3.0, -2.0, 0.5]):
            assert rec.box.theta == canonicalize_angle(theta)

    def test_roundtrip_identity(self):
        rng = np.random.default_rng(4)
        records = []
        for i in range(25):
            records.append(GroundTruthRecord(
                box=OrientedBox(*rng.uniform(1, 50, 2), *rng.uniform(1, 9, 2),
                                rng.uniform(-1.5, 1.5)),
                class_id=int(rng.integers(0, 3)),
                image_id=f"im{i % 4}",
                scene=(Scene.INSHORE, Scene.OFFSHORE, Scene.UNSPECIFIED)[i % 3],
            ))
        text = fileio.serialize_ground_truth(records)
        assert fileio.parse_ground_truth(text) == records
        # serialization is stable byte-wise
        assert fileio.serialize_ground_truth(fileio.parse_ground_truth(text)) == text


class TestPredictionParsing:
    def test_single_line(self):
        dets = fileio.parse_predictions(PRED_LINE)
        assert len(dets) == 1
        assert dets[0].score == 0.9

    def test_score_out_of_range(self):
        bad = PRED_LINE.replace('"score":0.9', '"score":1.5')
        with pytest.raises(ParseError):
            fileio.parse_predictions(bad)

    def test_scene_field_rejected(self):
        bad = PRED_LINE[:-1] + ',"scene":"inshore"}'
        with pytest.raises(ParseError):
            fileio.parse_predictions(bad)

    def test_roundtrip_identity(self):
        rng = np.random.default_rng(5)
        dets = [
            Detection(
                box=OrientedBox(*rng.uniform(1, 50, 2), *rng.uniform(1, 9, 2),
                                rng.uniform(-1.5, 1.5)),
                score=float(rng.uniform(0, 1)),
                class_id=0,
                image_id=f"im{i}",
            )
            for i in range(25)
        ]
        text = fileio.serialize_predictions(dets)
        assert fileio.parse_predictions(text) == dets

    def test_non_finite_rejected(self):
        bad = PRED_LINE.replace('"cx":10.0', '"cx":NaN')
        with pytest.raises(ParseError):
            fileio.parse_predictions(bad)


class TestWeightStore:
    def make_store(self):
        rng = np.random.default_rng(6)
        return WeightStore({
            "a.weight": rng.standard_normal((4, 3)),
            "a.bias": rng.standard_normal(4),
            "b.weight": rng.standard_normal((2, 2, 2)),
        })

    def test_roundtrip(self):
        store = self.make_store()
        text = fileio.save_weights(store)
        assert fileio.load_weights(text) == store

    def test_truncated_stream(self):
        text = fileio.save_weights(self.make_store())
        with pytest.raises(ParseError):
            fileio.load_weights(text[: len(text) // 2])

    def test_shape_mismatch(self):
        doc = {"w": {"shape": [256, 256], "data": [0.0] * 100}}
        with pytest.raises(ValidationError) as err:
            fileio.load_weights(json.dumps(doc))
        assert "w" in str(err.value)

    def test_non_finite_value(self):
        doc = {"w": {"shape": [2], "data": [1.0, None]}}
        with pytest.raises(ValidationError):
            fileio.load_weights(json.dumps(doc))

    def test_missing_required_named(self):
        store = self.make_store()
        text = fileio.save_weights(store)
        with pytest.raises(ValidationError) as err:
            fileio.load_weights(text, required=["a.weight", "zz.bias", "zz.weight"])
        msg = str(err.value)
        assert "zz.bias" in msg and "zz.weight" in msg

    def test_store_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            WeightStore({"w": np.array([1.0, math.inf])})


class TestPyramidFile:
    def test_roundtrip(self):
        from obbkit import synth

        pyr = synth.make_pyramid(3, 32, 32)
        text = fileio.save_pyramid("img0", 32, 32, pyr)
        image_id, w, h, loaded = fileio.load_pyramid(text)
        assert (image_id, w, h) == ("img0", 32.0, 32.0)
        assert len(loaded.levels) == len(pyr.levels)
        for a, b in zip(loaded.levels, pyr.levels):
            assert a.stride == b.stride
            assert np.array_equal(a.data, b.data)

    def test_stream_input(self):
        from obbkit import synth

        pyr = synth.make_pyramid(3, 16, 16)
        text = fileio.save_pyramid("x", 16, 16, pyr)
        _, _, _, loaded = fileio.load_pyramid(io.StringIO(text))
        assert loaded.levels[0].stride == 4.0
