import numpy as np
import pytest
from hypothesis import given, strategies as st

from macsort.errors import DegenerateEmbedding, DimensionMismatch, InvalidState
from macsort.geometry import (
    BBox,
    bbox_to_xysr,
    cosine_matrix,
    cosine_similarity,
    iou,
    iou_matrix,
    xysr_to_bbox,
)

boxes = st.builds(
    BBox,
    u=st.floats(-1e4, 1e4),
    v=st.floats(-1e4, 1e4),
    w=st.floats(0.01, 1e3),
    h=st.floats(0.01, 1e3),
)


class TestIou:
    def test_identical_boxes(self):
        b = BBox(10, 10, 10, 10)
        assert iou(b, b) == 1.0

    def test_disjoint_boxes(self):
        assert iou(BBox(10, 10, 10, 10), BBox(100, 100, 10, 10)) == 0.0

    def test_half_shift(self):
        # intersection 50, union 150
        assert iou(BBox(10, 10, 10, 10), BBox(15, 10, 10, 10)) == pytest.approx(1 / 3)

    def test_touching_edges_is_zero(self):
        assert iou(BBox(0, 0, 10, 10), BBox(10, 0, 10, 10)) == 0.0

    @given(boxes, boxes)
    def test_symmetric_and_bounded(self, a, b):
        ab = iou(a, b)
        assert ab == iou(b, a)
        assert 0.0 <= ab <= 1.0

    @given(boxes)
    def test_self_iou_is_one(self, b):
        assert iou(b, b) == pytest.approx(1.0)

    def test_matrix_matches_scalar(self, rng):
        xs = [BBox(*c) for c in rng.uniform(1, 50, size=(8, 4))]
        ys = [BBox(*c) for c in rng.uniform(1, 50, size=(5, 4))]
        mat = iou_matrix(xs, ys)
        for i, a in enumerate(xs):
            for j, b in enumerate(ys):
                assert mat[i, j] == pytest.approx(iou(a, b), abs=1e-12)

    def test_empty_matrix(self):
        assert iou_matrix([], [BBox(0, 0, 1, 1)]).shape == (0, 1)


class TestCosine:
    def test_identical(self):
        assert cosine_similarity(np.array([1.0, 0, 0]), np.array([1.0, 0, 0])) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity(np.array([1.0, 0]), np.array([0.0, 1])) == 0.0

    def test_45_degrees(self):
        got = cosine_similarity(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
        assert got == pytest.approx(0.70711, abs=1e-5)

    def test_zero_vector_raises(self):
        with pytest.raises(DegenerateEmbedding):
            cosine_similarity(np.zeros(3), np.array([1.0, 0, 0]))

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cosine_similarity(np.ones(3), np.ones(4))

    @given(st.lists(st.floats(-10, 10), min_size=2, max_size=6),
           st.floats(0.1, 100.0))
    def test_scaling_invariance(self, vals, k):
        x = np.asarray(vals)
        if np.linalg.norm(x) < 1e-6:
            return
        assert cosine_similarity(x, k * x) == pytest.approx(1.0)
        assert cosine_similarity(x, -k * x) == pytest.approx(-1.0)

    def test_matrix_zero_rows_give_zero(self):
        mat = cosine_matrix(np.zeros((1, 3)), np.eye(3))
        assert np.all(mat == 0.0)


class TestXysr:
    def test_square(self):
        assert bbox_to_xysr(BBox(0, 0, 10, 10))[2:] == (100.0, 1.0)

    def test_wide(self):
        u, v, s, r = bbox_to_xysr(BBox(1, 2, 20, 10))
        assert (s, r) == (200.0, 2.0)

    def test_round_trip_simple(self):
        b = BBox(3, 4, 5, 6)
        got = xysr_to_bbox(*bbox_to_xysr(b))
        assert got.u == pytest.approx(b.u)
        assert got.w == pytest.approx(b.w, rel=1e-12)
        assert got.h == pytest.approx(b.h, rel=1e-12)

    def test_invalid_scale(self):
        with pytest.raises(InvalidState):
            xysr_to_bbox(0, 0, -1.0, 1.0)
        with pytest.raises(InvalidState):
            xysr_to_bbox(0, 0, 1.0, 0.0)

    def test_round_trip_10k_random(self, rng):
        # tolerance pinned at 1e-9 relative over 10k boxes
        for _ in range(10_000):
            u, v = rng.uniform(-1e3, 1e3, 2)
            w, h = rng.uniform(1e-2, 1e3, 2)
            b = BBox(u, v, w, h)
            got = xysr_to_bbox(*bbox_to_xysr(b))
            assert abs(got.w - w) <= 1e-9 * w
            assert abs(got.h - h) <= 1e-9 * h


class TestBBox:
    def test_rejects_nonpositive_size(self):
        with pytest.raises(ValueError):
            BBox(0, 0, 0, 10)
        with pytest.raises(ValueError):
            BBox(0, 0, 10, -1)

    def test_edges(self):
        b = BBox(10, 20, 4, 8)
        assert (b.left, b.top, b.right, b.bottom) == (8, 16, 12, 24)
