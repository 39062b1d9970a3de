"""Layer semantics, optimizer arithmetic, and gradient verification."""

import numpy as np
import pytest

from phrasebreak.neural import (
    Adam,
    AdamState,
    BiLSTM,
    Dense,
    Dropout,
    Embedding,
    LayerNorm,
    MultiHeadSelfAttention,
    Parameter,
    TransformerEncoderBlock,
    adam_step,
    clip_gradients,
    finite_difference_check,
    softmax,
    softmax_cross_entropy,
)
from phrasebreak.neural.config import ModelConfig, TrainConfig
from phrasebreak.neural.losses import IGNORE_INDEX
from tests.conftest import randomize_parameters, tether_loss


class TestEmbedding:
    def test_row_lookup(self):
        rng = np.random.default_rng(0)
        emb = Embedding(2, 3, rng, dtype=np.float64)
        table = emb.weight.value
        out = emb.forward([1, 0, 1])
        assert np.array_equal(out, table[[1, 0, 1]])

    def test_empty_ids(self):
        rng = np.random.default_rng(0)
        emb = Embedding(4, 3, rng)
        assert emb.forward([]).shape == (0, 3)

    def test_backward_accumulates_repeated_rows(self):
        rng = np.random.default_rng(0)
        emb = Embedding(2, 3, rng, dtype=np.float64)
        emb.forward([1, 0, 1])
        emb.backward(np.ones((3, 3)))
        assert np.allclose(emb.weight.grad[1], 2.0)
        assert np.allclose(emb.weight.grad[0], 1.0)

    def test_out_of_range_id(self):
        rng = np.random.default_rng(0)
        emb = Embedding(2, 3, rng)
        with pytest.raises(ValueError, match="out of range"):
            emb.forward([0, 2])


class TestBiLSTM:
    def test_zero_parameters_give_zero_output(self):
        rng = np.random.default_rng(1)
        layer = BiLSTM(3, 4, rng, dtype=np.float64)
        for p in layer.parameters():
            p.value[...] = 0.0
        x = rng.normal(size=(5, 3))
        assert np.allclose(layer.forward(x), 0.0)

    def test_single_step_directions_agree_with_tied_weights(self):
        rng = np.random.default_rng(2)
        layer = BiLSTM(3, 4, rng, dtype=np.float64)
        layer.bwd.Wx.value[...] = layer.fwd.Wx.value
        layer.bwd.Wh.value[...] = layer.fwd.Wh.value
        layer.bwd.b.value[...] = layer.fwd.b.value
        out = layer.forward(rng.normal(size=(1, 3)))
        assert np.allclose(out[0, :4], out[0, 4:])

    def test_width_mismatch_rejected(self):
        rng = np.random.default_rng(3)
        layer = BiLSTM(3, 4, rng)
        with pytest.raises(ValueError, match="width"):
            layer.forward(np.zeros((2, 5), dtype=np.float32))

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(4)
        layer = BiLSTM(2, 2, rng, dtype=np.float64)
        head = Dense(4, 2, rng, dtype=np.float64)
        x = rng.normal(size=(3, 2))
        targets = [0, 1, 0]
        params = layer.parameters() + head.parameters()

        def inner(compute_grads=False):
            loss, dlogits = softmax_cross_entropy(head.forward(layer.forward(x)), targets)
            if compute_grads:
                layer.backward(head.backward(dlogits))
            return loss

        assert finite_difference_check(tether_loss(inner, params, rng), params) < 1e-4


class TestEncoderBlock:
    def test_single_position_attention_is_value_projection(self):
        rng = np.random.default_rng(5)
        attn = MultiHeadSelfAttention(8, 2, rng, dtype=np.float64)
        randomize_parameters(attn.parameters(), rng)
        x = rng.normal(size=(1, 8))
        expected = (x @ attn.Wv.value + attn.bv.value) @ attn.Wo.value + attn.bo.value
        assert np.allclose(attn.forward(x, None), expected)

    def test_shape_preserved(self):
        rng = np.random.default_rng(6)
        for T, D, heads in [(1, 4, 1), (7, 8, 2), (12, 16, 4)]:
            block = TransformerEncoderBlock(D, heads, 3 * D, rng, dtype=np.float64)
            x = rng.normal(size=(T, D))
            assert block.forward(x, None).shape == (T, D)

    def test_heads_must_divide_width(self):
        rng = np.random.default_rng(7)
        with pytest.raises(ValueError, match="divide"):
            MultiHeadSelfAttention(8, 3, rng)

    def test_padding_is_isolated(self):
        rng = np.random.default_rng(8)
        block = TransformerEncoderBlock(8, 2, 16, rng, dtype=np.float64)
        randomize_parameters(block.parameters(), rng)
        block.ln1.gamma.value[...] = 1.0
        block.ln2.gamma.value[...] = 1.0
        mask = np.array([True, True, True, False, False])
        x = rng.normal(size=(5, 8))
        base = block.forward(x, mask)
        x_altered = x.copy()
        x_altered[3:] = rng.normal(size=(2, 8)) * 50
        altered = block.forward(x_altered, mask)
        assert np.allclose(base[:3], altered[:3])

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(9)
        block = TransformerEncoderBlock(8, 2, 16, rng, dtype=np.float64)
        head = Dense(8, 2, rng, dtype=np.float64)
        params = block.parameters() + head.parameters()
        randomize_parameters(params, rng)
        x = rng.normal(size=(4, 8))
        mask = np.array([True, True, True, False])
        targets = [0, 1, 0, IGNORE_INDEX]

        def inner(compute_grads=False):
            loss, dlogits = softmax_cross_entropy(head.forward(block.forward(x, mask)), targets)
            if compute_grads:
                block.backward(head.backward(dlogits))
            return loss

        assert finite_difference_check(tether_loss(inner, params, rng), params) < 1e-4


class TestSoftmaxCrossEntropy:
    def test_uniform_logits_give_log_two(self):
        loss, _ = softmax_cross_entropy(np.zeros((1, 2)), [0])
        assert loss == pytest.approx(np.log(2.0), abs=1e-12)

    def test_extreme_logits_stable(self):
        loss, dlogits = softmax_cross_entropy(np.array([[1000.0, 0.0]]), [0])
        assert loss == pytest.approx(0.0, abs=1e-12)
        assert np.isfinite(dlogits).all()

    def test_all_ignored_rejected(self):
        with pytest.raises(ValueError, match="ignored"):
            softmax_cross_entropy(np.zeros((2, 2)), [IGNORE_INDEX, IGNORE_INDEX])

    def test_ignored_positions_have_zero_gradient(self):
        rng = np.random.default_rng(10)
        logits = rng.normal(size=(4, 3))
        loss, dlogits = softmax_cross_entropy(logits, [0, IGNORE_INDEX, 2, IGNORE_INDEX])
        assert np.all(dlogits[1] == 0.0) and np.all(dlogits[3] == 0.0)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        logits = Parameter("logits", rng.normal(size=(5, 3)))
        targets = [0, 2, IGNORE_INDEX, 1, 1]

        def loss_fn(compute_grads=False):
            loss, dlogits = softmax_cross_entropy(logits.value, targets)
            if compute_grads:
                logits.grad += dlogits
            return loss

        assert finite_difference_check(loss_fn, [logits]) < 1e-6

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(12)
        probs = softmax(rng.normal(scale=20, size=(50, 7)))
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-6)


class TestAdam:
    def test_first_step_magnitude(self):
        p = Parameter("w", np.array([1.0]))
        p.grad[...] = 1.0
        state = AdamState.for_parameter(p)
        adam_step(p, state, lr=0.001)
        expected = 0.001 * 1.0 / (1.0 + 1e-8)
        assert p.value[0] == pytest.approx(1.0 - expected, abs=1e-12)
        assert state.step_count == 1

    def test_zero_gradient_no_update(self):
        p = Parameter("w", np.array([2.5]))
        state = AdamState.for_parameter(p)
        adam_step(p, state, lr=0.1)
        assert p.value[0] == 2.5

    def test_two_identical_steps_nearly_equal(self):
        p = Parameter("w", np.array([0.0]))
        state = AdamState.for_parameter(p)
        p.grad[...] = 1.0
        adam_step(p, state, lr=0.001)
        first = -p.value[0]
        p.grad[...] = 1.0
        adam_step(p, state, lr=0.001)
        second = -p.value[0] - first
        assert second == pytest.approx(first, rel=1e-6)

    def test_non_finite_gradient_names_parameter(self):
        p = Parameter("blstm.0.fwd.Wx", np.zeros(3))
        p.grad[...] = np.nan
        state = AdamState.for_parameter(p)
        with pytest.raises(ValueError, match="blstm.0.fwd.Wx"):
            adam_step(p, state, lr=0.1)

    def test_optimizer_wrapper(self):
        rng = np.random.default_rng(13)
        params = [Parameter("a", rng.normal(size=3)), Parameter("b", rng.normal(size=(2, 2)))]
        opt = Adam(params, lr=0.01)
        for p in params:
            p.grad[...] = 1.0
        opt.step()
        opt.zero_grad()
        assert all(np.all(p.grad == 0.0) for p in params)


class TestClipGradients:
    def test_under_limit_untouched(self):
        p = Parameter("w", np.zeros(2))
        p.grad[...] = [3.0, 4.0]
        assert clip_gradients([p], 10.0) == 1.0
        assert np.allclose(p.grad, [3.0, 4.0])

    def test_over_limit_scaled(self):
        p = Parameter("w", np.zeros(2))
        p.grad[...] = [30.0, 40.0]
        factor = clip_gradients([p], 10.0)
        assert factor == pytest.approx(0.2)
        assert np.allclose(p.grad, [6.0, 8.0])

    def test_post_clip_norm_bounded(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            params = [Parameter(f"p{i}", np.zeros(int(rng.integers(1, 6)))) for i in range(3)]
            for p in params:
                p.grad[...] = rng.normal(scale=rng.uniform(0.1, 30), size=p.value.shape)
            max_norm = float(rng.uniform(0.5, 10))
            clip_gradients(params, max_norm)
            norm = np.sqrt(sum(float((p.grad ** 2).sum()) for p in params))
            assert norm <= max_norm * (1 + 1e-9)


class TestDropout:
    def test_eval_mode_is_identity(self):
        drop = Dropout(0.4, np.random.default_rng(15))
        drop.set_training(False)
        x = np.random.default_rng(0).normal(size=(20, 4))
        assert np.array_equal(drop.forward(x), x)

    def test_zero_probability_is_identity_in_training(self):
        drop = Dropout(0.0, np.random.default_rng(16))
        x = np.ones((5, 5))
        assert np.array_equal(drop.forward(x), x)

    def test_training_mean_preserved(self):
        drop = Dropout(0.3, np.random.default_rng(17))
        x = np.ones(100_000)
        out = drop.forward(x)
        assert out.mean() == pytest.approx(1.0, abs=0.02)

    def test_backward_uses_same_mask(self):
        drop = Dropout(0.5, np.random.default_rng(18))
        x = np.ones((10, 10))
        out = drop.forward(x)
        grad = drop.backward(np.ones_like(x))
        assert np.array_equal(out, grad)


class TestFiniteDifferenceCheck:
    def test_quadratic_is_exact(self):
        p = Parameter("w", np.array([1.0, -2.0, 3.0]))

        def loss_fn(compute_grads=False):
            if compute_grads:
                p.grad += 2.0 * p.value
            return float((p.value ** 2).sum())

        assert finite_difference_check(loss_fn, [p]) < 1e-8

    def test_rejects_float32(self):
        p = Parameter("w", np.zeros(2, dtype=np.float32))
        with pytest.raises(ValueError, match="float64"):
            finite_difference_check(lambda compute_grads=False: 0.0, [p])

    def test_detects_wrong_gradient(self):
        p = Parameter("w", np.array([1.0, 2.0]))

        def loss_fn(compute_grads=False):
            if compute_grads:
                p.grad += 3.0 * p.value  # wrong: true gradient is 2x
            return float((p.value ** 2).sum())

        assert finite_difference_check(loss_fn, [p]) > 0.1


class TestLayerNorm:
    def test_normalizes_rows(self):
        ln = LayerNorm(6, dtype=np.float64)
        x = np.random.default_rng(19).normal(loc=3.0, scale=2.0, size=(4, 6))
        out = ln.forward(x)
        assert np.allclose(out.mean(axis=1), 0.0, atol=1e-9)
        assert np.allclose(out.std(axis=1), 1.0, atol=1e-3)


class TestConfigs:
    def test_model_config_validation(self):
        with pytest.raises(ValueError, match="variant"):
            ModelConfig(variant="rnn", vocab_size=4, embedding_dim=4,
                        hidden_size=4, num_layers=1)
        with pytest.raises(ValueError, match="divide"):
            ModelConfig(variant="encoder", vocab_size=4, embedding_dim=6,
                        hidden_size=6, num_layers=1, num_heads=4, ffn_size=8)
        with pytest.raises(ValueError, match="dropout"):
            ModelConfig(variant="blstm", vocab_size=4, embedding_dim=4,
                        hidden_size=4, num_layers=1, dropout_p=1.0)

    def test_train_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.1, batch_size=0)
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=-1.0)
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.1, num_epochs=0)
        cfg = TrainConfig(learning_rate=0.1)
        assert cfg.batch_size == 64 and cfg.num_epochs == 10
