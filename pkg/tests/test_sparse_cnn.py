"""
Masked CNN body: train / infer agreement, passthrough, work proportionality and dense agreement
"""
import time

import numpy as np
import pytest

from core.exceptions import ShapeMismatchError
from core.tensor_core import ConvWeights1x1, ConvWeights3x3, MacCounter, Tensor, conv3x3
from services.freqmask import BitMask2D
from services.sparse_cnn import (
    MaskedConvBlock,
    block_forward_infer,
    block_forward_train,
    build_gather_plan,
    dense_agreement_region,
    run_body_cnn,
)


def random_block(rng, c_in, c_out=None, activation="relu"):
    c_out = c_out or c_in
    weights = ConvWeights3x3(rng.standard_normal((c_out, c_in, 3, 3)) * 0.3, rng.standard_normal(c_out) * 0.1)
    slope = rng.random(c_out) * 0.5 if activation == "prelu" else None
    return MaskedConvBlock.from_3x3(weights, activation, slope), weights


def random_mask(rng, h, w, density=None):
    density = rng.random() if density is None else density
    return BitMask2D(rng.random((h, w)) < density)


class TestMaskedConvBlock:
    """Construction and activation"""

    def test_from_3x3_shapes(self, rng):
        block, _ = random_block(rng, 3, 5)
        assert (block.in_channels, block.out_channels) == (3, 5)
        assert block.weights.in_channels == 27

    def test_rejects_non_unfolded_width(self):
        with pytest.raises(ShapeMismatchError):
            MaskedConvBlock(ConvWeights1x1(np.zeros((2, 10)), np.zeros(2)))

    def test_prelu_needs_slope(self, rng):
        weights = ConvWeights3x3(np.zeros((2, 2, 3, 3)), np.zeros(2))
        with pytest.raises(ShapeMismatchError):
            MaskedConvBlock.from_3x3(weights, "prelu")

    def test_prelu_activation(self):
        block = MaskedConvBlock(ConvWeights1x1(np.zeros((2, 9)), np.zeros(2)), "prelu", np.array([0.25, 0.5]))
        out = block.activate(np.array([[-4.0, 2.0], [-4.0, 2.0]]))
        np.testing.assert_array_equal(out, [[-1.0, 2.0], [-2.0, 2.0]])


class TestGatherPlan:
    """Row-major enumeration of kept positions"""

    def test_row_major_order(self):
        bits = np.array([[0, 1, 0], [1, 0, 1]], dtype=bool)
        plan = build_gather_plan(BitMask2D(bits))
        assert plan.q == 3
        assert plan.indices == [(0, 1), (1, 0), (1, 2)]


class TestFullMask:
    """All-ones masks reduce to ordinary dense convolution"""

    @pytest.mark.parametrize("policy", ["masked", "dense"])
    def test_matches_reference_conv(self, rng, policy):
        t = Tensor(rng.standard_normal((3, 6, 7)))
        block, weights = random_block(rng, 3, 4, activation="none")
        m = BitMask2D.ones(6, 7)
        expected = conv3x3(t, weights).data
        for forward in (block_forward_train, block_forward_infer):
            out = forward(t, block, m, policy)
            np.testing.assert_allclose(out.data, expected, atol=1e-5, rtol=0)


class TestTrainInferAgreement:
    """Dense-masked training forward equals gather / GEMM / scatter inference"""

    @pytest.mark.parametrize("policy, cases", [("masked", 500), ("dense", 250)])
    def test_randomized_stacks(self, rng, policy, cases):
        start = time.perf_counter()
        for _ in range(cases):
            c = int(rng.integers(1, 5))
            h, w = (int(v) for v in rng.integers(1, 11, size=2))
            n_blocks = int(rng.integers(1, 5))
            activation = ["relu", "prelu", "none"][int(rng.integers(0, 3))]
            blocks = [random_block(rng, c, activation=activation)[0] for _ in range(n_blocks)]
            f = Tensor(rng.standard_normal((c, h, w)))
            m = random_mask(rng, h, w)

            train = run_body_cnn(f, blocks, m, "train", policy)
            infer = run_body_cnn(f, blocks, m, "infer", policy)
            np.testing.assert_allclose(infer.data, train.data, atol=1e-5, rtol=0)

            pruned = ~m.bits
            np.testing.assert_array_equal(infer.data[:, pruned], f.data[:, pruned])
        assert time.perf_counter() - start < 60.0

    def test_empty_mask_returns_input(self, rng):
        f = Tensor(rng.standard_normal((2, 5, 5)))
        block, _ = random_block(rng, 2)
        assert block_forward_infer(f, block, BitMask2D.zeros(5, 5)) is f

    @pytest.mark.parametrize("mode", ["train", "infer"])
    def test_refined_mask_agrees_where_both_prune(self, rng, mode):
        f = Tensor(rng.standard_normal((4, 9, 11)))
        blocks = [random_block(rng, 4, activation=act)[0] for act in ("relu", "prelu", "none")]
        coarse = random_mask(rng, 9, 11, 0.2)
        fine = BitMask2D(coarse.bits | (rng.random((9, 11)) < 0.3))
        out_coarse = run_body_cnn(f, blocks, coarse, mode)
        out_fine = run_body_cnn(f, blocks, fine, mode)
        both_pruned = ~fine.bits
        np.testing.assert_array_equal(out_coarse.data[:, both_pruned], out_fine.data[:, both_pruned])
        np.testing.assert_array_equal(out_fine.data[:, both_pruned], f.data[:, both_pruned])

    def test_pruning_needs_square_block(self, rng):
        f = Tensor(rng.standard_normal((2, 4, 4)))
        block, _ = random_block(rng, 2, 3)
        m = BitMask2D(np.eye(4, dtype=bool))
        with pytest.raises(ShapeMismatchError):
            block_forward_infer(f, block, m)
        with pytest.raises(ShapeMismatchError):
            block_forward_train(f, block, m)

    def test_non_square_block_with_full_mask(self, rng):
        f = Tensor(rng.standard_normal((2, 4, 4)))
        block, _ = random_block(rng, 2, 3)
        assert block_forward_infer(f, block, BitMask2D.ones(4, 4)).channels == 3

    def test_chaining_checked(self, rng):
        f = Tensor(rng.standard_normal((2, 4, 4)))
        blocks = [random_block(rng, 2, 3)[0], random_block(rng, 2)[0]]
        with pytest.raises(ShapeMismatchError):
            run_body_cnn(f, blocks, BitMask2D.ones(4, 4))

    def test_mask_shape_checked(self, rng):
        f = Tensor(rng.standard_normal((2, 4, 4)))
        with pytest.raises(ShapeMismatchError):
            block_forward_infer(f, random_block(rng, 2)[0], BitMask2D.ones(4, 5))


class TestWorkProportionality:
    """Instrumented MACs equal Q x 9 x C_in x C_out per block"""

    def test_counter_matches_formula(self, rng):
        h, w, c = 9, 11, 3
        densities = [0.0, 1.0] + list(rng.random(18))
        for density in densities:
            m = random_mask(rng, h, w, density)
            if density == 0.0:
                m = BitMask2D.zeros(h, w)
            if density == 1.0:
                m = BitMask2D.ones(h, w)
            blocks = [random_block(rng, c)[0] for _ in range(3)]
            counter = MacCounter()
            run_body_cnn(Tensor(rng.standard_normal((c, h, w))), blocks, m, "infer", counter=counter)
            q = m.count()
            for i in range(3):
                assert counter.by_layer.get(f"body.{i}", 0) == q * 9 * c * c
            assert counter.total == 3 * q * 9 * c * c


class TestDenseAgreementRegion:
    """Accelerated output equals the dense body inside the eroded region"""

    @pytest.mark.parametrize("policy", ["masked", "dense"])
    def test_agreement_inside_region(self, rng, policy):
        for _ in range(50):
            c = int(rng.integers(1, 4))
            h, w = (int(v) for v in rng.integers(6, 14, size=2))
            n_blocks = int(rng.integers(1, 4))
            blocks = [random_block(rng, c)[0] for _ in range(n_blocks)]
            f = Tensor(rng.standard_normal((c, h, w)))
            m = random_mask(rng, h, w, density=0.8)

            sparse = run_body_cnn(f, blocks, m, "infer", policy)
            dense = run_body_cnn(f, blocks, BitMask2D.ones(h, w), "infer", policy)
            region = dense_agreement_region(m, n_blocks, policy).bits
            np.testing.assert_allclose(sparse.data[:, region], dense.data[:, region], atol=1e-5, rtol=0)

    def test_region_sizes(self):
        m = BitMask2D.ones(9, 9)
        assert dense_agreement_region(m, 2, "masked").count() == 25
        assert dense_agreement_region(m, 2, "dense").count() == 49
        assert dense_agreement_region(m, 0).count() == 81
        assert dense_agreement_region(m, 1, "dense").count() == 81
