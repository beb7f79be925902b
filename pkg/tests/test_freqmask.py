"""
Mask generation: high-frequency map, binarization strategies, dilation and window decisions
"""
import numpy as np
import pytest

from core.exceptions import ShapeMismatchError
from core.image_io import load_image
from core.tensor_core import Tensor
from models.model_spec import MaskStrategy
from services.corpus import list_corpus
from services.freqmask import (
    BitMask2D,
    HighFreqMap,
    apply_strategy,
    binarize_fixed,
    binarize_median,
    dilate,
    erode,
    gaussian_blur,
    gaussian_weights,
    generate_mask,
    highfreq_map,
    kmeans2_binarize,
    load_mask,
    pad_mask,
    save_mask,
    to_luma,
    window_decision,
)


def flat_image(value=0.5, size=16):
    return Tensor(np.full((3, size, size), value, dtype=np.float32))


def sse_of_split(values, high):
    total = 0.0
    for side in (values[high], values[~high]):
        if side.size:
            total += float(((side - side.mean()) ** 2).sum())
    return total


def best_split_sse(values):
    """Exhaustive 1-D two-cluster oracle over sorted split points"""
    ordered = np.sort(values.astype(np.float64))
    best = float(((ordered - ordered.mean()) ** 2).sum())
    for i in range(1, ordered.size):
        left, right = ordered[:i], ordered[i:]
        best = min(best, float(((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()))
    return best


def brute_force_highfreq(luma):
    """Direct 5x5 Gaussian with reflected borders, then the normalized residual"""
    taps = gaussian_weights(5, 1.0)
    padded = np.pad(luma.astype(np.float64), 2, mode="reflect")
    blurred = np.zeros_like(luma, dtype=np.float64)
    for y in range(luma.shape[0]):
        for x in range(luma.shape[1]):
            for dy in range(5):
                for dx in range(5):
                    blurred[y, x] += taps[dy] * taps[dx] * padded[y + dy, x + dx]
    residual = np.abs(luma - blurred)
    return residual / residual.max()


class TestHighFreqMap:
    """Luma, blur and normalized residual"""

    def test_luma_weights(self):
        img = Tensor(np.stack([np.ones((1, 1)), np.zeros((1, 1)), np.zeros((1, 1))]))
        assert to_luma(img).data[0, 0, 0] == pytest.approx(0.299)

    def test_gaussian_weights_normalized(self):
        weights = gaussian_weights(5, 1.0)
        assert weights.sum() == pytest.approx(1.0)
        assert weights[2] == weights.max()
        np.testing.assert_allclose(weights, weights[::-1])

    def test_blur_even_size_rejected(self):
        with pytest.raises(ShapeMismatchError):
            gaussian_weights(4, 1.0)

    def test_blur_preserves_constant(self):
        blurred = gaussian_blur(Tensor(np.full((1, 6, 6), 0.7)), 5, 1.0)
        np.testing.assert_allclose(blurred.data, 0.7, atol=1e-6)

    def test_flat_image_gives_zero_map(self):
        h = highfreq_map(flat_image())
        assert h.values.max() == 0.0

    def test_single_bright_pixel(self):
        data = np.zeros((3, 9, 9), dtype=np.float32)
        data[:, 4, 4] = 1.0
        h = highfreq_map(Tensor(data))
        assert h.values.max() == pytest.approx(1.0)
        assert np.unravel_index(np.argmax(h.values), h.values.shape) == (4, 4)
        assert h.values.min() >= 0.0

    def test_constant_shift_invariance(self, rng):
        lr = Tensor(rng.random((3, 12, 12)) * 0.8)
        shifted = Tensor(lr.data + np.float32(0.1))
        np.testing.assert_allclose(highfreq_map(shifted).values, highfreq_map(lr).values, atol=1e-5, rtol=0)

    def test_step_edge_matches_direct_convolution(self):
        luma = np.zeros((7, 7), dtype=np.float32)
        luma[:, 3:] = 1.0
        h = highfreq_map(Tensor(np.stack([luma, luma, luma])))
        np.testing.assert_allclose(h.values, brute_force_highfreq(luma), atol=1e-5, rtol=0)
        assert h.values[:, 2:4].min() > h.values[:, 0].max()


class TestKmeans:
    """Two-cluster Lloyd binarization"""

    def test_flat_map_is_degenerate(self):
        result = kmeans2_binarize(HighFreqMap(np.zeros((4, 4))))
        assert result.iterations == 0
        assert result.mask.count() == 0

    def test_all_high_is_degenerate(self):
        result = kmeans2_binarize(HighFreqMap(np.full((4, 4), 0.9)))
        assert result.iterations == 0
        assert result.mask.count() == 0

    def test_two_levels_separate(self):
        values = np.zeros((4, 4))
        values[:2] = 1.0
        values[2:] = 0.1
        result = kmeans2_binarize(HighFreqMap(values))
        assert result.converged
        assert result.mask.count() == 8
        assert result.center_high == pytest.approx(1.0)
        assert result.center_low == pytest.approx(0.1)
        assert result.threshold == pytest.approx(0.55)

    def test_four_values_converge_in_one_step(self):
        result = kmeans2_binarize(HighFreqMap(np.array([[0.1, 0.2, 0.8, 0.9]])))
        assert result.converged
        assert result.iterations == 1
        assert result.center_low == pytest.approx(0.15)
        assert result.center_high == pytest.approx(0.85)
        np.testing.assert_array_equal(result.mask.bits, [[False, False, True, True]])

    def test_bundled_corpus_converges_at_a_fixed_point(self, corpus_dir):
        for path in list_corpus(corpus_dir):
            h = highfreq_map(load_image(path))
            result = kmeans2_binarize(h)
            assert result.converged, path.name
            assert 1 <= result.iterations <= 10, path.name
            values = h.values.astype(np.float64)
            high = result.mask.bits
            assert result.center_high == pytest.approx(values[high].mean())
            assert result.center_low == pytest.approx(values[~high].mean())
            assert result.threshold == pytest.approx(0.5 * (result.center_low + result.center_high))
            np.testing.assert_array_equal(high, values >= result.threshold)

    def test_sse_near_exhaustive_optimum(self, corpus_dir):
        for path in list_corpus(corpus_dir):
            values = highfreq_map(load_image(path)).values.ravel()[::8][:512]
            values = values / values.max()
            result = kmeans2_binarize(HighFreqMap(values[None, :]))
            sse = sse_of_split(values.astype(np.float64), result.mask.bits.ravel())
            assert sse <= 1.05 * best_split_sse(values) + 1e-12, path.name


class TestStrategies:
    """Fixed and median binarization, strategy parsing"""

    def test_fixed_threshold_inclusive(self):
        mask = binarize_fixed(HighFreqMap(np.array([[0.2, 0.5, 0.9]])), 0.5)
        np.testing.assert_array_equal(mask.bits, [[False, True, True]])

    def test_median_uses_lower_median(self):
        mask = binarize_median(HighFreqMap(np.array([[0.1, 0.2, 0.3, 0.4]])))
        np.testing.assert_array_equal(mask.bits, [[False, False, True, True]])

    @pytest.mark.parametrize("text, kind, thresh", [
        ("kmeans", "kmeans", None),
        ("median", "median", None),
        ("fixed:0.25", "fixed", 0.25),
        (" Fixed:1 ", "fixed", 1.0),
    ])
    def test_parse(self, text, kind, thresh):
        strategy = MaskStrategy.parse(text)
        assert strategy.kind == kind
        assert strategy.thresh == thresh

    @pytest.mark.parametrize("text", ["otsu", "fixed:", "fixed:abc"])
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            MaskStrategy.parse(text)

    def test_apply_strategy_returns_kmeans_result_only_for_kmeans(self):
        h = HighFreqMap(np.array([[0.0, 1.0]]))
        assert apply_strategy(h, MaskStrategy.parse("kmeans"))[1] is not None
        assert apply_strategy(h, MaskStrategy.parse("median"))[1] is None


class TestMorphology:
    """Dilation, erosion and padding"""

    def test_single_pixel_dilation(self):
        bits = np.zeros((5, 5), dtype=bool)
        bits[2, 2] = True
        grown = dilate(BitMask2D(bits), 3)
        assert grown.count() == 9
        assert grown.bits[1:4, 1:4].all()

    def test_corner_dilation_clips(self):
        bits = np.zeros((5, 5), dtype=bool)
        bits[0, 0] = True
        assert dilate(BitMask2D(bits), 3).count() == 4

    def test_identity_kernel(self, rng):
        m = BitMask2D(rng.random((6, 7)) < 0.3)
        assert dilate(m, 1) is m

    def test_extensive_and_monotone(self, rng):
        m = BitMask2D(rng.random((12, 10)) < 0.1)
        previous = m
        for k in (3, 5, 7, 9, 11):
            grown = dilate(m, k)
            assert (grown.bits >= previous.bits).all()
            previous = grown

    @pytest.mark.parametrize("k", [3, 5])
    def test_dilation_composes(self, rng, k):
        m = BitMask2D(rng.random((15, 13)) < 0.05)
        twice = dilate(dilate(m, k), k)
        once = dilate(m, 2 * k - 1)
        h = k - 1
        np.testing.assert_array_equal(twice.bits[h:-h, h:-h], once.bits[h:-h, h:-h])

    def test_even_kernel_rejected(self):
        with pytest.raises(ShapeMismatchError):
            dilate(BitMask2D.ones(3, 3), 2)

    def test_erosion_treats_outside_as_zero(self):
        eroded = erode(BitMask2D.ones(5, 5), 3)
        assert eroded.count() == 9

    def test_pad_mask(self):
        padded = pad_mask(BitMask2D.ones(5, 6), 4)
        assert (padded.height, padded.width) == (8, 8)
        assert padded.count() == 30

    def test_bitmask_rejects_non_binary(self):
        with pytest.raises(ShapeMismatchError):
            BitMask2D(np.array([[0, 2]]))


class TestWindowDecision:
    """Mean-threshold keep bits"""

    def test_threshold_is_inclusive(self):
        bits = np.zeros((4, 4), dtype=bool)
        bits[:2, :1] = True  # top-left window mean 0.5
        bits[2:, 2:] = True  # bottom-right window mean 1.0
        mw = window_decision(BitMask2D(bits), 2, 0.5)
        np.testing.assert_array_equal(mw.bits, [[True, False], [False, True]])
        assert mw.kept() == 2
        np.testing.assert_array_equal(mw.kept_indices(), [0, 3])

    def test_sigma_zero_keeps_all(self):
        mw = window_decision(BitMask2D.zeros(8, 8), 4, 0.0)
        assert mw.kept() == 4

    def test_sigma_above_one_keeps_none(self):
        mw = window_decision(BitMask2D.ones(8, 8), 4, 1.2)
        assert mw.kept() == 0

    def test_kept_windows_shrink_as_sigma_grows(self, rng):
        m = BitMask2D(rng.random((32, 32)) < 0.4)
        previous = None
        for sigma in np.linspace(0.0, 1.0, 21):
            mw = window_decision(m, 8, float(sigma))
            if previous is not None:
                assert mw.kept() <= previous.kept()
                assert (mw.bits <= previous.bits).all()
            previous = mw

    def test_requires_divisible_mask(self):
        with pytest.raises(ShapeMismatchError):
            window_decision(BitMask2D.ones(6, 8), 4, 0.5)


class TestGenerateMask:
    """End-to-end mask stage and PGM export"""

    def test_flat_image_all_zero(self):
        artifacts = generate_mask(flat_image(), MaskStrategy(), 5)
        assert artifacts.mask.count() == 0
        assert artifacts.kmeans.iterations == 0
        assert artifacts.ms >= 0.0

    def test_dilation_applied_after_strategy(self, corpus_dir):
        lr = load_image(list_corpus(corpus_dir)[0])
        artifacts = generate_mask(lr, MaskStrategy(), 3)
        np.testing.assert_array_equal(artifacts.mask.bits, dilate(artifacts.base, 3).bits)
        assert artifacts.strategy == "kmeans"

    def test_save_load_round_trip(self, tmp_path, rng):
        m = BitMask2D(rng.random((7, 9)) < 0.4)
        save_mask(m, tmp_path / "mask.pgm")
        np.testing.assert_array_equal(load_mask(tmp_path / "mask.pgm").bits, m.bits)
