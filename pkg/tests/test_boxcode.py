import math

import numpy as np
import pytest

from obbkit import OrientedBox, SingularTransformError, ValidationError
from obbkit import boxcode
from obbkit.boxcode import (
    PAPER_LITERAL,
    ROTATION_MATRIX,
    BoxDeltas,
    decode,
    encode,
    init_proposals,
)


def random_box(rng):
    return OrientedBox(*rng.uniform(10, 500, 2), *rng.uniform(1, 300, 2),
                       rng.uniform(-3, 3))


def angle_gap(a, b):
    return abs(math.remainder(a - b, math.pi))


class TestBoxDeltas:
    def test_clamps_log_scales(self):
        d = BoxDeltas(0, 0, 12.0, -9.5, 0)
        assert d.dw == 8.0
        assert d.dh == -8.0

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            BoxDeltas(math.nan, 0, 0, 0, 0)


class TestDecode:
    @pytest.mark.parametrize("variant", [PAPER_LITERAL, ROTATION_MATRIX])
    def test_zero_deltas_identity_exact(self, variant):
        rng = np.random.default_rng(40)
        zero = BoxDeltas(0, 0, 0, 0, 0)
        for _ in range(500):
            p = random_box(rng)
            out = decode(p, zero, variant)
            assert out == p

    def test_log_width_scale(self):
        p = OrientedBox(0, 0, 10, 4, 0)
        out = decode(p, BoxDeltas(0, 0, math.log(2), 0, 0))
        assert out == OrientedBox(0, 0, 20, 4, 0)

    def test_paper_literal_center_update(self):
        # Independent scalar evaluation of the printed center map.
        p = OrientedBox(100, 100, 40, 20, math.pi / 6)
        d = BoxDeltas(0.1, -0.2, 0, 0, 0.05)
        out = decode(p, d, PAPER_LITERAL)
        c, s = math.cos(math.pi / 6), math.sin(math.pi / 6)
        assert out.cx == pytest.approx(100 + 0.1 * 40 * c + (-0.2) * 20 * s,
                                       abs=1e-12)
        assert out.cy == pytest.approx(100 + 0.1 * 40 * s + (-0.2) * 20 * c,
                                       abs=1e-12)
        assert out.w == pytest.approx(40, abs=1e-12)
        assert out.h == pytest.approx(20, abs=1e-12)
        assert out.theta == pytest.approx(math.pi / 6 + 0.05, abs=1e-12)

    def test_rotation_matrix_center_update(self):
        p = OrientedBox(0, 0, 10, 10, math.pi / 3)
        d = BoxDeltas(0.2, 0.1, 0, 0, 0)
        out = decode(p, d, ROTATION_MATRIX)
        c, s = math.cos(math.pi / 3), math.sin(math.pi / 3)
        assert out.cx == pytest.approx(0.2 * 10 * c - 0.1 * 10 * s, abs=1e-12)
        assert out.cy == pytest.approx(0.2 * 10 * s + 0.1 * 10 * c, abs=1e-12)

    def test_sides_stay_positive_under_extreme_deltas(self):
        p = OrientedBox(0, 0, 1e-3, 1e3, 0)
        out = decode(p, BoxDeltas(0, 0, -50, 50, 0))
        assert out.w > 0 and out.h > 0

    def test_translation_equivariance(self):
        rng = np.random.default_rng(41)
        for variant in (PAPER_LITERAL, ROTATION_MATRIX):
            for _ in range(100):
                p = random_box(rng)
                d = BoxDeltas(*rng.uniform(-0.5, 0.5, 4), rng.uniform(-1, 1))
                tx, ty = rng.uniform(-100, 100, 2)
                shifted = OrientedBox(p.cx + tx, p.cy + ty, p.w, p.h, p.theta)
                a = decode(shifted, d, variant)
                b = decode(p, d, variant)
                assert a.cx == pytest.approx(b.cx + tx, abs=1e-9)
                assert a.cy == pytest.approx(b.cy + ty, abs=1e-9)
                assert (a.w, a.h, a.theta) == (b.w, b.h, b.theta)

    def test_unknown_variant(self):
        with pytest.raises(ValidationError):
            decode(OrientedBox(0, 0, 1, 1, 0), BoxDeltas(0, 0, 0, 0, 0),
                   "bogus")


class TestEncode:
    @pytest.mark.parametrize("variant", [PAPER_LITERAL, ROTATION_MATRIX])
    def test_self_encode_is_zero(self, variant):
        rng = np.random.default_rng(42)
        for _ in range(100):
            p = random_box(rng)
            if variant == PAPER_LITERAL and abs(math.cos(2 * p.theta)) < 1e-6:
                continue
            d = encode(p, p, variant)
            assert d.as_tuple() == (0.0, 0.0, 0.0, 0.0, 0.0)

    def test_rotation_matrix_roundtrip(self):
        rng = np.random.default_rng(43)
        worst = 0.0
        for _ in range(1000):
            p, t = random_box(rng), random_box(rng)
            d = encode(p, t, ROTATION_MATRIX)
            out = decode(p, d, ROTATION_MATRIX)
            worst = max(worst, abs(out.cx - t.cx), abs(out.cy - t.cy),
                        abs(out.w - t.w), abs(out.h - t.h),
                        angle_gap(out.theta, t.theta))
        assert worst < 1e-9

    def test_paper_literal_roundtrip_away_from_singularity(self):
        rng = np.random.default_rng(44)
        count = 0
        while count < 500:
            p, t = random_box(rng), random_box(rng)
            if abs(math.cos(2 * p.theta)) < 1e-3:
                continue
            count += 1
            d = encode(p, t, PAPER_LITERAL)
            out = decode(p, d, PAPER_LITERAL)
            assert abs(out.cx - t.cx) < 1e-6
            assert abs(out.cy - t.cy) < 1e-6
            assert abs(out.w - t.w) < 1e-9
            assert abs(out.h - t.h) < 1e-9
            assert angle_gap(out.theta, t.theta) < 1e-9

    @pytest.mark.parametrize("theta", [-math.pi / 4, math.pi / 4])
    def test_paper_literal_singular_at_quarter_pi(self, theta):
        p = OrientedBox(0, 0, 10, 5, theta)
        t = OrientedBox(3, 4, 8, 6, 0.2)
        with pytest.raises(SingularTransformError):
            encode(p, t, PAPER_LITERAL)
        # The proper-rotation variant has no singularity there.
        d = encode(p, t, ROTATION_MATRIX)
        out = decode(p, d, ROTATION_MATRIX)
        assert out.cx == pytest.approx(3, abs=1e-9)

    def test_singular_threshold(self):
        # cos(2 theta) just below the 1e-6 cutoff trips the error.
        theta = math.pi / 4 - 2e-7
        assert abs(math.cos(2 * theta)) < 1e-6
        with pytest.raises(SingularTransformError):
            encode(OrientedBox(0, 0, 4, 2, theta), OrientedBox(1, 1, 4, 2, 0),
                   PAPER_LITERAL)


class TestInitProposals:
    def test_paper_configuration(self):
        ps = init_proposals(300, 512, 512)
        assert len(ps) == 300
        expected = OrientedBox(256, 256, 128, 256, -math.pi / 4)
        assert all(b == expected for b in ps.boxes)
        assert ps.features.shape == (300, 256)
        assert not ps.features.any()

    def test_rectangular_image(self):
        ps = init_proposals(1, 100, 200)
        assert ps.boxes[0] == OrientedBox(50, 100, 25, 100, -math.pi / 4)

    @pytest.mark.parametrize("n", [0, -3])
    def test_non_positive_count(self, n):
        with pytest.raises(ValidationError):
            init_proposals(n, 64, 64)

    def test_non_positive_dims(self):
        with pytest.raises(ValidationError):
            init_proposals(1, 0, 64)

    def test_feature_width_enforced(self):
        with pytest.raises(ValidationError):
            boxcode.ProposalSet(boxes=(OrientedBox(0, 0, 1, 1, 0),),
                                features=np.zeros((1, 128)))
