import json
import math
import subprocess
import sys

import numpy as np
import pytest

import oracles
from obbkit import cli, fileio, matching
from obbkit.types import OrientedBox


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def synth_dir(tmp_path, capsys):
    out = tmp_path / "fix"
    code, _, _ = run_cli(capsys, "synth", "--out-dir", str(out), "--seed", "5",
                         "--images", "4", "--boxes-per-image", "2")
    assert code == 0
    return out


class TestEval:
    def test_self_evaluation(self, synth_dir, capsys):
        code, out, _ = run_cli(
            capsys, "eval", "--gt", str(synth_dir / "synthetic.gt.jsonl"),
            "--pred", str(synth_dir / "synthetic.pred.jsonl"),
        )
        assert code == 0
        fields = dict(line.split("\t") for line in out.splitlines())
        assert float(fields["ap50"]) == 1.0
        assert fields["method"] == "all_points"

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "eval", "--gt",
                               str(tmp_path / "nope.gt.jsonl"),
                               "--pred", str(tmp_path / "nope.pred.jsonl"))
        assert code == 2
        assert "error" in err

    def test_malformed_line_names_position(self, synth_dir, tmp_path, capsys):
        bad = tmp_path / "bad.pred.jsonl"
        good = (synth_dir / "synthetic.pred.jsonl").read_text()
        bad.write_text(good + "{broken\n")
        code, _, err = run_cli(
            capsys, "eval", "--gt", str(synth_dir / "synthetic.gt.jsonl"),
            "--pred", str(bad),
        )
        assert code == 2
        assert f"line {len(good.splitlines()) + 1}" in err

    def test_pr_out(self, synth_dir, tmp_path, capsys):
        table = tmp_path / "pr.tsv"
        code, _, _ = run_cli(
            capsys, "eval", "--gt", str(synth_dir / "synthetic.gt.jsonl"),
            "--pred", str(synth_dir / "synthetic.pred.jsonl"),
            "--pr-out", str(table),
        )
        assert code == 0
        assert "# split: offshore" in table.read_text()

    def test_eleven_point_flag(self, synth_dir, capsys):
        code, out, _ = run_cli(
            capsys, "eval", "--gt", str(synth_dir / "synthetic.gt.jsonl"),
            "--pred", str(synth_dir / "synthetic.pred.jsonl"),
            "--method", "eleven-point",
        )
        assert code == 0
        assert "eleven_point" in out


class TestIou:
    def test_identical_inline(self, capsys):
        code, out, _ = run_cli(capsys, "iou", "--box-a", "0,0,4,2,0.5",
                               "--box-b", "0,0,4,2,0.5")
        assert code == 0
        assert out.strip() == "1.0"

    def test_disjoint(self, capsys):
        code, out, _ = run_cli(capsys, "iou", "--box-a", "0,0,1,1,0",
                               "--box-b", "9,9,1,1,0")
        assert code == 0
        assert out.strip() == "0.0"

    def test_rotated_squares(self, capsys):
        theta = math.pi / 4
        code, out, _ = run_cli(capsys, "iou", "--box-a", "0,0,1,1,0",
                               "--box-b", f"0,0,1,1,{theta}")
        assert code == 0
        expect = 2 * (math.sqrt(2) - 1) / (2 - 2 * (math.sqrt(2) - 1))
        assert float(out.strip()) == pytest.approx(expect, abs=1e-9)

    def test_matrix_from_files(self, tmp_path, capsys):
        a = tmp_path / "a.tsv"
        b = tmp_path / "b.tsv"
        a.write_text("0\t0\t2\t2\t0\n4\t4\t2\t2\t0\n")
        b.write_text("0\t0\t2\t2\t0\n")
        code, out, _ = run_cli(capsys, "iou", "--file-a", str(a),
                               "--file-b", str(b))
        assert code == 0
        rows = [line.split("\t") for line in out.splitlines()]
        assert len(rows) == 2 and len(rows[0]) == 1
        assert float(rows[0][0]) == 1.0
        assert float(rows[1][0]) == 0.0

    def test_malformed_tuple(self, capsys):
        code, _, err = run_cli(capsys, "iou", "--box-a", "1,2,3",
                               "--box-b", "0,0,1,1,0")
        assert code == 2
        assert "5 values" in err


class TestMatch:
    def test_single_pair(self, tmp_path, capsys):
        gt_path = tmp_path / "m.gt.jsonl"
        pred_path = tmp_path / "m.pred.jsonl"
        gt_path.write_text(
            '{"image_id":"a","cx":10,"cy":10,"w":4,"h":2,"theta":0.1,'
            '"class_id":0,"scene":"unspecified"}\n'
        )
        pred_path.write_text(
            '{"image_id":"a","cx":11,"cy":10,"w":4,"h":2,"theta":0.1,'
            '"class_id":0,"score":0.8}\n'
        )
        code, out, err = run_cli(capsys, "match", "--gt", str(gt_path),
                                 "--pred", str(pred_path))
        assert code == 0
        rows = [line.split("\t") for line in out.splitlines()]
        assert len(rows) == 1
        assert rows[0][:3] == ["a", "0", "0"]
        assert "total" in err

    def test_zero_lambdas(self, synth_dir, capsys):
        code, out, _ = run_cli(
            capsys, "match", "--gt", str(synth_dir / "synthetic.gt.jsonl"),
            "--pred", str(synth_dir / "synthetic.pred.jsonl"),
            "--lambda-cls", "0", "--lambda-l1", "0", "--lambda-iou", "0",
        )
        assert code == 0
        rows = [line.split("\t") for line in out.splitlines()]
        assert rows, "expected at least one pair"
        assert all(float(r[6]) == 0.0 for r in rows)
        # still one-to-one per image
        for image_id in {r[0] for r in rows}:
            img_rows = [r for r in rows if r[0] == image_id]
            assert len({r[1] for r in img_rows}) == len(img_rows)
            assert len({r[2] for r in img_rows}) == len(img_rows)

    def test_totals_match_bruteforce(self, tmp_path, capsys):
        rng = np.random.default_rng(90)
        gts, preds = [], []
        for i in range(4):
            gts.append(
                {"image_id": "img", "cx": float(rng.uniform(10, 50)),
                 "cy": float(rng.uniform(10, 50)),
                 "w": float(rng.uniform(2, 9)), "h": float(rng.uniform(2, 9)),
                 "theta": float(rng.uniform(-1.5, 1.5)), "class_id": 0,
                 "scene": "unspecified"}
            )
        for i in range(5):
            preds.append(
                {"image_id": "img", "cx": float(rng.uniform(10, 50)),
                 "cy": float(rng.uniform(10, 50)),
                 "w": float(rng.uniform(2, 9)), "h": float(rng.uniform(2, 9)),
                 "theta": float(rng.uniform(-1.5, 1.5)), "class_id": 0,
                 "score": float(rng.uniform(0.05, 0.95))}
            )
        gt_path = tmp_path / "bf.gt.jsonl"
        pred_path = tmp_path / "bf.pred.jsonl"
        gt_path.write_text("".join(json.dumps(o) + "\n" for o in gts))
        pred_path.write_text("".join(json.dumps(o) + "\n" for o in preds))
        code, out, err = run_cli(capsys, "match", "--gt", str(gt_path),
                                 "--pred", str(pred_path))
        assert code == 0
        pred_boxes = [OrientedBox(p["cx"], p["cy"], p["w"], p["h"], p["theta"])
                      for p in preds]
        gt_boxes = [OrientedBox(g["cx"], g["cy"], g["w"], g["h"], g["theta"])
                    for g in gts]
        cost = matching.cost_matrix(pred_boxes, [p["score"] for p in preds],
                                    gt_boxes, matching.MatchWeights(),
                                    image_w=512, image_h=512)
        _, expected_total = oracles.brute_force_assignment(cost)
        reported = float(err.splitlines()[0].split("\t")[2])
        assert reported == pytest.approx(expected_total, abs=1e-9)


class TestDecodeEncode:
    def test_roundtrip_via_cli(self, tmp_path, capsys):
        rng = np.random.default_rng(91)
        boxes = np.column_stack([
            rng.uniform(20, 100, (6, 2)), rng.uniform(4, 30, (6, 2)),
            rng.uniform(-1.3, 1.3, (6, 1)),
        ])
        targets = np.column_stack([
            rng.uniform(20, 100, (6, 2)), rng.uniform(4, 30, (6, 2)),
            rng.uniform(-1.3, 1.3, (6, 1)),
        ])
        bp = tmp_path / "boxes.tsv"
        tp = tmp_path / "targets.tsv"
        bp.write_text("".join("\t".join(repr(float(v)) for v in row) + "\n"
                              for row in boxes))
        tp.write_text("".join("\t".join(repr(float(v)) for v in row) + "\n"
                              for row in targets))
        code, out, _ = run_cli(capsys, "encode", "--boxes", str(bp),
                               "--targets", str(tp),
                               "--decode", "rotation-matrix")
        assert code == 0
        dp = tmp_path / "deltas.tsv"
        dp.write_text(out)
        code, out, _ = run_cli(capsys, "decode", "--boxes", str(bp),
                               "--deltas", str(dp),
                               "--decode", "rotation-matrix")
        assert code == 0
        decoded = np.array([
            [float(v) for v in line.split("\t")] for line in out.splitlines()
        ])
        assert np.max(np.abs(decoded[:, :4] - targets[:, :4])) < 1e-9
        for got, want in zip(decoded[:, 4], targets[:, 4]):
            assert abs(math.remainder(got - want, math.pi)) < 1e-9

    def test_singular_rows_reported(self, tmp_path, capsys):
        bp = tmp_path / "boxes.tsv"
        tp = tmp_path / "targets.tsv"
        quarter = math.pi / 4
        bp.write_text(
            f"0\t0\t4\t2\t{-quarter}\n10\t10\t4\t2\t0.1\n5\t5\t4\t2\t{quarter}\n"
        )
        tp.write_text("1\t1\t4\t2\t0\n11\t11\t4\t2\t0\n6\t6\t4\t2\t0\n")
        code, _, err = run_cli(capsys, "encode", "--boxes", str(bp),
                               "--targets", str(tp))
        assert code == 2
        assert "singular rows: 0,2" in err


class TestRoiAlignCommand:
    def test_pooling_from_pyramid(self, tmp_path, capsys):
        out_dir = tmp_path / "roi"
        code, _, _ = run_cli(capsys, "synth", "--out-dir", str(out_dir),
                             "--seed", "3", "--images", "1",
                             "--boxes-per-image", "1", "--with-pyramids")
        assert code == 0
        bp = tmp_path / "boxes.tsv"
        bp.write_text("32\t32\t16\t8\t0.4\n")
        code, out, _ = run_cli(
            capsys, "roialign", "--pyramid", str(out_dir / "img0000.pyr.json"),
            "--level", "1", "--boxes", str(bp), "--out-h", "3", "--out-w",
            "3", "--sampling-ratio", "2",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["shape"] == [1, 256, 3, 3]
        assert len(doc["data"]) == 256 * 9


class TestInfer:
    def test_writes_expected_count(self, tmp_path, capsys):
        out_dir = tmp_path / "inf"
        code, _, _ = run_cli(capsys, "synth", "--out-dir", str(out_dir),
                             "--seed", "4", "--images", "1",
                             "--boxes-per-image", "1", "--with-pyramids",
                             "--with-weights")
        assert code == 0
        pred_path = tmp_path / "out.pred.jsonl"
        code, _, _ = run_cli(
            capsys, "infer", "--pyramid", str(out_dir / "img0000.pyr.json"),
            "--weights", str(out_dir / "synthetic.wts.json"),
            "--out", str(pred_path), "--proposals", "17",
        )
        assert code == 0
        dets = fileio.parse_predictions(pred_path.read_text())
        assert len(dets) == 17
        assert all(d.image_id == "img0000" for d in dets)

    def test_score_thresh_validation(self, tmp_path, capsys):
        code, _, err = run_cli(
            capsys, "infer", "--pyramid", "x", "--weights", "y",
            "--out", str(tmp_path / "o"), "--score-thresh", "1.1",
        )
        assert code == 2
        assert "score-thresh" in err


class TestSynth:
    def test_deterministic_bytes(self, tmp_path, capsys):
        blobs = []
        for name in ("one", "two"):
            out = tmp_path / name
            code, _, _ = run_cli(capsys, "synth", "--out-dir", str(out),
                                 "--seed", "12", "--images", "3",
                                 "--boxes-per-image", "2", "--with-pyramids",
                                 "--with-weights")
            assert code == 0
            blob = b"".join(
                p.read_bytes() for p in sorted(out.iterdir())
            )
            blobs.append(blob)
        assert blobs[0] == blobs[1]

    def test_zero_images(self, tmp_path, capsys):
        out = tmp_path / "empty"
        code, _, _ = run_cli(capsys, "synth", "--out-dir", str(out),
                             "--seed", "1", "--images", "0")
        assert code == 0
        assert (out / "synthetic.gt.jsonl").read_text() == ""
        assert (out / "synthetic.pred.jsonl").read_text() == ""


class TestEntryPoints:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "obbkit", "--version"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.strip() == "0.1.0"

    def test_console_script(self):
        proc = subprocess.run(["obbkit", "--version"], capture_output=True,
                              text=True)
        assert proc.returncode == 0
        assert proc.stdout.strip() == "0.1.0"
