import io
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from impstudio.design import BBox
from impstudio.errors import ConstantTruth, DimensionMismatch, EmptyAnnotationSet, EmptyMask, ParseError
from impstudio.maps import (
    AnnotationSet,
    BinaryMask,
    ImportanceMap,
    aggregate,
    bilinear_resample,
    element_score,
    evaluate,
    iou,
    mask_to_rle,
    pearson_cc,
    region_stats,
    rle_to_mask,
    sentinel_gate,
)

from conftest import make_design, uniform_map
from oracle import oracle_metrics


def mask_from_rows(rows):
    return BinaryMask.from_array(np.array(rows, dtype=np.uint8))


def map_from_rows(rows):
    return ImportanceMap.from_array(np.array(rows, dtype=np.float64))


class TestImportanceMap:
    def test_range_enforced(self):
        with pytest.raises(ValueError):
            ImportanceMap(2, 2, np.array([[0.0, 0.5], [1.0, 1.5]]))
        with pytest.raises(ValueError):
            ImportanceMap(2, 2, np.array([[0.0, 0.5], [1.0, -0.1]]))

    def test_shape_enforced(self):
        with pytest.raises(DimensionMismatch):
            ImportanceMap(3, 2, np.zeros((3, 3)))

    def test_values_immutable(self):
        m = uniform_map(2, 2, 0.5)
        with pytest.raises(ValueError):
            m.values[0, 0] = 1.0

    def test_json_roundtrip(self):
        m = map_from_rows([[0.0, 0.25], [0.5, 1.0]])
        again = ImportanceMap.from_dict(json.loads(json.dumps(m.to_dict())))
        assert (again.values == m.values).all()

    def test_png_export_values(self):
        m = map_from_rows([[0.0, 0.5], [1.0, 0.25]])
        img = Image.open(io.BytesIO(m.to_png_bytes()))
        assert img.mode == "L" and img.size == (2, 2)
        px = np.asarray(img)
        assert (px == np.round(m.values * 255)).all()


class TestAggregate:
    def test_single_all_ones(self):
        m = aggregate([mask_from_rows([[1, 1], [1, 1]])])
        assert (m.values == 1.0).all()

    def test_ones_and_zeros_average_half(self):
        m = aggregate([mask_from_rows([[1, 1], [1, 1]]), mask_from_rows([[0, 0], [0, 0]])])
        assert (m.values == 0.5).all()

    def test_hand_counted_thirds(self):
        # per-cell one-counts {3, 2, 1, 0} over 3 masks
        masks = [
            mask_from_rows([[1, 1], [1, 0]]),
            mask_from_rows([[1, 1], [0, 0]]),
            mask_from_rows([[1, 0], [0, 0]]),
        ]
        m = aggregate(masks)
        expected = np.array([[1.0, 2 / 3], [1 / 3, 0.0]])
        assert (m.values == expected).all()

    def test_aggregate_of_copies_is_exact(self):
        base = mask_from_rows([[1, 0], [0, 1]])
        m = aggregate([base] * 7)
        assert (m.values == base.bits).all()

    def test_empty_and_mismatch_errors(self):
        with pytest.raises(EmptyAnnotationSet):
            aggregate([])
        with pytest.raises(DimensionMismatch):
            aggregate([mask_from_rows([[1]]), mask_from_rows([[1, 0]])])


class TestIou:
    def test_identical_nonempty(self):
        a = mask_from_rows([[1, 0], [1, 1]])
        assert iou(a, a) == 1.0

    def test_disjoint(self):
        assert iou(mask_from_rows([[1, 0]]), mask_from_rows([[0, 1]])) == 0.0

    def test_band_overlap_third(self):
        a = np.zeros((4, 4), dtype=np.uint8)
        a[0:2] = 1
        b = np.zeros((4, 4), dtype=np.uint8)
        b[1:3] = 1
        assert iou(BinaryMask.from_array(a), BinaryMask.from_array(b)) == pytest.approx(4 / 12)

    def test_both_empty_is_one(self):
        empty = mask_from_rows([[0, 0]])
        assert iou(empty, empty) == 1.0

    @given(st.integers(0, 2**16 - 1), st.integers(0, 2**16 - 1))
    def test_symmetric_and_bounded(self, abits, bbits):
        a = BinaryMask.from_array(np.array([(abits >> i) & 1 for i in range(16)], dtype=np.uint8).reshape(4, 4))
        b = BinaryMask.from_array(np.array([(bbits >> i) & 1 for i in range(16)], dtype=np.uint8).reshape(4, 4))
        v = iou(a, b)
        assert v == iou(b, a)
        assert 0.0 <= v <= 1.0


def gate_with_ious(ious, threshold=0.6, pass_fraction=2 / 3):
    """Build sentinel results with exact target IoUs on 10x10 masks.

    IoU k/10 is realized as a 10-cell truth row vs a k-cell annotated subset
    plus (10-k) cells outside it: intersection k, union 10 + (10-k) - ... so
    instead use: annotated = first k cells of truth, nothing else ->
    IoU = k / 10.
    """
    results = []
    for v in ious:
        frac = Fraction(v).limit_denominator(100)
        n = frac.denominator * 2
        truth = np.zeros(n * 2, dtype=np.uint8)
        truth[:n] = 1
        ann = np.zeros(n * 2, dtype=np.uint8)
        # intersection = k, union = n  ->  annotated subset of truth with k bits
        k = int(frac.numerator * (n // frac.denominator))
        ann[:k] = 1
        results.append(
            (BinaryMask.from_array(ann.reshape(2, n)), BinaryMask.from_array(truth.reshape(2, n)))
        )
    return sentinel_gate(results, threshold, pass_fraction)


class TestSentinelGate:
    def test_two_of_three_accepts(self):
        res = gate_with_ious([0.9, 0.7, 0.1])
        assert res.accepted
        assert res.ious == (0.9, 0.7, 0.1)

    def test_one_of_three_rejects(self):
        res = gate_with_ious([0.9, 0.5, 0.1])
        assert not res.accepted

    def test_single_sentinel_above_threshold_accepts(self):
        assert gate_with_ious([0.61]).accepted

    def test_boundary_iou_fails_strict_inequality(self):
        # exactly 0.6 must not pass ("over 0.6")
        res = gate_with_ious([0.6, 0.6, 0.6])
        assert res.ious == (0.6, 0.6, 0.6)
        assert not res.accepted

    def test_empty_results_error(self):
        with pytest.raises(EmptyAnnotationSet):
            sentinel_gate([])


class TestElementScore:
    def test_uniform_map(self):
        design = make_design([(10, 10, 30, 20)])
        assert element_score(uniform_map(8, 8, 0.4), design.elements[0], design) == pytest.approx(0.4)

    def test_indicator_map_scores_one(self):
        design = make_design([(0, 0, 50, 50)], canvas=(100, 100))
        values = np.zeros((4, 4))
        values[:2, :2] = 1.0
        m = ImportanceMap.from_array(values)
        assert element_score(m, design.elements[0], design) == 1.0

    def test_bottom_row_mean(self):
        design = make_design([(0, 50, 100, 50)], canvas=(100, 100))
        m = map_from_rows([[0.2, 0.4], [0.6, 0.8]])
        assert element_score(m, design.elements[0], design) == pytest.approx(0.7)

    def test_empty_mask_raises(self):
        # sliver sticking in from the right edge, too thin to catch a center
        design = make_design([(99.9, 0, 10, 10)], canvas=(100, 100))
        with pytest.raises(EmptyMask):
            element_score(uniform_map(4, 4, 0.5), design.elements[0], design)

    def test_uniform_map_symmetry_across_elements(self):
        design = make_design([(0, 0, 20, 20), (40, 40, 10, 30), (70, 10, 25, 60)])
        m = uniform_map(16, 16, 0.37)
        scores = [element_score(m, e, design) for e in design.elements]
        assert all(s == pytest.approx(scores[0], abs=1e-12) for s in scores)


class TestRegionStats:
    def test_uniform(self):
        design = make_design([(0, 0, 100, 100)])
        m = uniform_map(8, 8, 0.5)
        face, text = region_stats(m, [BBox(10, 10, 20, 20)], [BBox(50, 50, 30, 30)], design)
        assert face == pytest.approx(0.5) and text == pytest.approx(0.5)

    def test_absent_category(self):
        design = make_design([(0, 0, 100, 100)])
        face, text = region_stats(uniform_map(4, 4, 0.2), [], [BBox(0, 0, 50, 50)], design)
        assert face is None
        assert text == pytest.approx(0.2)

    def test_hand_arithmetic(self):
        design = make_design([(0, 0, 100, 100)])
        values = np.zeros((10, 10))
        values[0:2, 0:2] = 0.9  # face box region
        values[5:7, 0:2] = 0.3  # text box 1
        values[5:7, 5:7] = 0.5  # text box 2
        m = ImportanceMap.from_array(values)
        face, text = region_stats(
            m,
            [BBox(0, 0, 20, 20)],
            [BBox(0, 50, 20, 20), BBox(50, 50, 20, 20)],
            design,
        )
        assert face == pytest.approx(0.9)
        assert text == pytest.approx(0.4)


class TestEvaluate:
    def test_identity(self):
        m = map_from_rows([[0.1, 0.9], [0.4, 0.6]])
        rep = evaluate(m, m)
        assert rep.cc == pytest.approx(1.0, abs=1e-9)
        assert rep.rmse == pytest.approx(0.0, abs=1e-12)
        assert rep.r2 == pytest.approx(1.0, abs=1e-9)
        assert rep.kl == pytest.approx(0.0, abs=1e-12)

    def test_anticorrelation(self):
        truth = map_from_rows([[0.0, 0.0], [1.0, 1.0]])
        pred = map_from_rows([[1.0, 1.0], [0.0, 0.0]])
        assert evaluate(pred, truth).cc == pytest.approx(-1.0, abs=1e-12)

    def test_frozen_oracle_values(self):
        # Values computed once with the mpmath reference evaluator.
        truth = map_from_rows([[0.1, 0.2], [0.3, 0.4]])
        pred = map_from_rows([[0.4, 0.3], [0.2, 0.1]])
        rep = evaluate(pred, truth)
        assert rep.rmse == pytest.approx(0.22360679774997897, abs=1e-9)
        assert rep.kl == pytest.approx(0.45643439490650656, abs=1e-9)
        assert rep.cc == pytest.approx(-1.0, abs=1e-9)
        assert rep.r2 == pytest.approx(-3.0, abs=1e-9)

    def test_matches_mpmath_oracle_on_random_pairs(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            t = rng.random((8, 8))
            p = rng.random((8, 8))
            rep = evaluate(ImportanceMap.from_array(p), ImportanceMap.from_array(t))
            r2, rmse_, cc, kl = oracle_metrics(p.tolist(), t.tolist())
            assert rep.r2 == pytest.approx(float(r2), abs=1e-9)
            assert rep.rmse == pytest.approx(float(rmse_), abs=1e-9)
            assert rep.cc == pytest.approx(float(cc), abs=1e-9)
            assert rep.kl == pytest.approx(float(kl), abs=1e-9)

    def test_constant_truth_error(self):
        with pytest.raises(ConstantTruth):
            evaluate(uniform_map(2, 2, 0.3), uniform_map(2, 2, 0.5))

    def test_dimension_mismatch_strict(self):
        with pytest.raises(DimensionMismatch):
            evaluate(uniform_map(4, 4, 0.3), map_from_rows([[0.1, 0.9]]), strict=True)

    def test_resampling_mode_compares_across_sizes(self):
        truth = map_from_rows([[0.0, 1.0], [1.0, 0.0]])
        big = ImportanceMap.from_array(np.kron(truth.values, np.ones((8, 8))))
        rep = evaluate(big, truth)
        assert rep.cc == pytest.approx(1.0, abs=1e-9)
        assert rep.rmse == pytest.approx(0.0, abs=1e-12)

    @settings(max_examples=30)
    @given(
        st.floats(0.05, 1.0),
        st.floats(0.0, 0.5),
    )
    def test_cc_affine_invariance(self, alpha, beta):
        rng = np.random.default_rng(11)
        t = rng.random((6, 6))
        p = rng.random((6, 6))
        beta = min(beta, 1.0 - alpha)  # keep alpha*p + beta inside [0, 1]
        base = pearson_cc(p, t)
        transformed = pearson_cc(alpha * p + beta, t)
        assert transformed == pytest.approx(base, abs=1e-9)

    @settings(max_examples=25)
    @given(st.integers(0, 2**31 - 1))
    def test_kl_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        t = rng.random((5, 5))
        p = rng.random((5, 5))
        rep = evaluate(ImportanceMap.from_array(p), ImportanceMap.from_array(t))
        assert rep.kl >= 0.0

    def test_kl_zero_only_for_identical(self):
        t = np.array([[0.2, 0.8], [0.5, 0.5]])
        p = np.array([[0.8, 0.2], [0.5, 0.5]])
        rep = evaluate(ImportanceMap.from_array(p), ImportanceMap.from_array(t))
        assert rep.kl > 1e-6


class TestBilinearResample:
    def test_identity_size(self):
        v = np.random.default_rng(3).random((5, 7))
        assert np.allclose(bilinear_resample(v, 7, 5), v)

    def test_constant_preserved(self):
        v = np.full((3, 3), 0.4)
        out = bilinear_resample(v, 9, 6)
        assert np.allclose(out, 0.4)

    def test_upsample_block_structure(self):
        v = np.array([[0.0, 1.0]])
        out = bilinear_resample(v, 4, 1)
        # outer cells clamp to the source cells, inner cells interpolate
        assert out[0, 0] == pytest.approx(0.0)
        assert out[0, 3] == pytest.approx(1.0)
        assert out[0, 1] == pytest.approx(0.25)
        assert out[0, 2] == pytest.approx(0.75)


class TestRle:
    def test_roundtrip(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            bits = (rng.random((6, 9)) < 0.4).astype(np.uint8)
            mask = BinaryMask.from_array(bits)
            rle = mask_to_rle(mask)
            again = rle_to_mask(rle, 9, 6)
            assert (again.bits == bits).all()
            assert rle[0] >= 0 and all(r > 0 for r in rle[1:])

    def test_all_zeros_and_ones(self):
        zeros = BinaryMask.from_array(np.zeros((2, 3), dtype=np.uint8))
        assert mask_to_rle(zeros) == [6]
        ones = BinaryMask.from_array(np.ones((2, 3), dtype=np.uint8))
        assert mask_to_rle(ones) == [0, 6]

    def test_bad_total_raises(self):
        with pytest.raises(ParseError):
            rle_to_mask([3], 2, 2)

    def test_negative_run_raises(self):
        with pytest.raises(ParseError):
            rle_to_mask([-1, 5], 2, 2)


class TestAnnotationSet:
    def test_requires_masks(self):
        with pytest.raises(EmptyAnnotationSet):
            AnnotationSet("d1", ())

    def test_dimension_consistency(self):
        with pytest.raises(DimensionMismatch):
            AnnotationSet("d1", (mask_from_rows([[1]]), mask_from_rows([[1, 0]])))
