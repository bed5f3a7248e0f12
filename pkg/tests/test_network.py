import numpy as np
import pytest

from kbctag import autodiff as ad
from kbctag.data import TaskSpec, Vocabulary, is_well_formed
from kbctag.errors import (
    ConfigError,
    ContractError,
    DataError,
    LabelError,
    TaskError,
    VocabError,
)
from kbctag.network import LstmCellParams, TaggerConfig, TaggerModel, lstm_cell_step

from helpers import central_difference, max_rel_error


def _zero_cell(d_in, d_h):
    cell = LstmCellParams(d_in, d_h, np.random.default_rng(0), "cell")
    for _, node in cell.parameters():
        node.value = np.zeros_like(node.value)
    return cell


def _vec(values):
    return ad.parameter(np.asarray(values, dtype=np.float64))


class TestLstmCellStep:
    def test_all_zero_parameters_and_state(self):
        cell = _zero_cell(2, 2)
        h, c = lstm_cell_step(cell, _vec([1.0, -1.0]), _vec([0.0, 0.0]), _vec([0.0, 0.0]))
        np.testing.assert_array_equal(h.value, [0.0, 0.0])
        np.testing.assert_array_equal(c.value, [0.0, 0.0])

    def test_zero_parameters_nonzero_cell(self):
        # all gates sit at sigmoid(0)=0.5 and the candidate at tanh(0)=0,
        # so c = 0.5*c_prev and h = 0.5*tanh(0.5*c_prev)
        cell = _zero_cell(2, 3)
        v = np.array([0.4, -1.2, 2.0])
        h, c = lstm_cell_step(cell, _vec([0.0, 0.0]), _vec(np.zeros(3)), _vec(v))
        np.testing.assert_allclose(c.value, 0.5 * v, atol=1e-12)
        np.testing.assert_allclose(h.value, 0.5 * np.tanh(0.5 * v), atol=1e-12)

    def test_matches_straight_line_hand_evaluation(self):
        rng = np.random.default_rng(23)
        cell = LstmCellParams(3, 3, rng, "cell")
        x = rng.uniform(-1, 1, 3)
        h_prev = rng.uniform(-1, 1, 3)
        c_prev = rng.uniform(-1, 1, 3)

        def sig(z):
            return 1.0 / (1.0 + np.exp(-z))

        # independent evaluation of the four gate formulas with plain numpy
        pre = {
            g: x @ cell.w[g].value + h_prev @ cell.u[g].value + cell.b[g].value
            for g in ("input", "forget", "output", "candidate")
        }
        i, f, o = sig(pre["input"]), sig(pre["forget"]), sig(pre["output"])
        g = np.tanh(pre["candidate"])
        expected_c = f * c_prev + i * g
        expected_h = o * np.tanh(expected_c)

        h, c = lstm_cell_step(cell, _vec(x), _vec(h_prev), _vec(c_prev))
        np.testing.assert_allclose(c.value, expected_c, atol=1e-12)
        np.testing.assert_allclose(h.value, expected_h, atol=1e-12)

    def test_forget_bias_initialized_to_one(self):
        cell = LstmCellParams(2, 2, np.random.default_rng(0), "cell")
        np.testing.assert_array_equal(cell.b["forget"].value, [1.0, 1.0])
        np.testing.assert_array_equal(cell.b["input"].value, [0.0, 0.0])


class TestEncode:
    def test_output_shape_default_dims(self):
        vocab = Vocabulary(["word"])
        task = TaskSpec(0, "kp", ("O", "B-X"), is_main=True)
        model = TaggerModel(TaggerConfig(seed=0), vocab, [task])
        out = model.encode([vocab.index_of("word")])
        assert out.value.shape == (1, 100)

    def test_inference_deterministic(self, tiny_model):
        ids = tiny_model.token_ids(["we", "use", "an", "oracle"])
        a = tiny_model.encode(ids).value
        b = tiny_model.encode(ids).value
        assert np.array_equal(a, b)

    def test_dropout_requires_rng(self):
        vocab = Vocabulary(["word"])
        task = TaskSpec(0, "kp", ("O", "B-X"), is_main=True)
        model = TaggerModel(
            TaggerConfig(embed_dim=2, hidden_dim=2, layers=1, input_dropout=0.5, seed=0),
            vocab,
            [task],
        )
        with pytest.raises(ContractError):
            model.encode([1], train_mode=True)

    def test_dropout_reproducible_from_seed(self):
        vocab = Vocabulary(["a", "b", "c"])
        task = TaskSpec(0, "kp", ("O", "B-X"), is_main=True)
        model = TaggerModel(
            TaggerConfig(embed_dim=4, hidden_dim=4, layers=2, input_dropout=0.4, seed=0),
            vocab,
            [task],
        )
        ids = [1, 2, 3]
        a = model.encode(ids, train_mode=True, rng=np.random.default_rng(7)).value
        b = model.encode(ids, train_mode=True, rng=np.random.default_rng(7)).value
        c = model.encode(ids, train_mode=True, rng=np.random.default_rng(8)).value
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_bad_token_index(self, tiny_model):
        with pytest.raises(VocabError):
            tiny_model.encode([999])

    def test_reversal_symmetry_with_swapped_directions(self):
        """Reversing the sentence and swapping fwd/bwd blocks (and, for the
        upper layers, the two halves of the input weight rows) must produce
        the row-reversed, half-swapped encoding."""
        vocab = Vocabulary(["t0", "t1", "t2"])
        task = TaskSpec(0, "kp", ("O", "B-X"), is_main=True)
        config = TaggerConfig(embed_dim=2, hidden_dim=2, layers=3, input_dropout=0.0, seed=3)
        model = TaggerModel(config, vocab, [task])
        mirror = TaggerModel(config, vocab, [task])

        h = config.hidden_dim
        mirror.embeddings.value = model.embeddings.value.copy()
        for layer, (fwd, bwd) in enumerate(model.layers):
            m_fwd, m_bwd = mirror.layers[layer]
            for gate in ("input", "forget", "output", "candidate"):
                w_f, w_b = fwd.w[gate].value.copy(), bwd.w[gate].value.copy()
                if layer > 0:  # input halves arrive swapped in the mirror model
                    w_f = np.vstack([w_f[h:], w_f[:h]])
                    w_b = np.vstack([w_b[h:], w_b[:h]])
                m_fwd.w[gate].value = w_b
                m_bwd.w[gate].value = w_f
                m_fwd.u[gate].value = bwd.u[gate].value.copy()
                m_bwd.u[gate].value = fwd.u[gate].value.copy()
                m_fwd.b[gate].value = bwd.b[gate].value.copy()
                m_bwd.b[gate].value = fwd.b[gate].value.copy()

        ids = [1, 2, 3]
        enc = model.encode(ids).value
        mirrored = mirror.encode(ids[::-1]).value
        swapped = np.hstack([enc[:, h:], enc[:, :h]])
        np.testing.assert_allclose(mirrored, swapped[::-1], atol=1e-12)


class TestForward:
    def test_rows_are_distributions(self, tiny_model):
        probs = tiny_model.forward(["we", "use", "an", "oracle"])
        assert probs.shape == (4, 3)
        assert np.all(probs >= 0)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_zero_encoder_softmax_of_bias(self, tiny_model):
        bias = np.array([0.5, -0.25, 1.0])
        for _, node in tiny_model.parameters():
            node.value = np.zeros_like(node.value)
        w, b = tiny_model.heads["kp"]
        b.value = bias.copy()
        probs = tiny_model.forward(["we", "oracle"])
        expected = ad.softmax(bias)
        np.testing.assert_allclose(probs, np.tile(expected, (2, 1)), atol=1e-12)

    def test_distinct_heads_differ_on_shared_encoding(self, tiny_model):
        kp = tiny_model.forward(["we", "use"], task_name="kp")
        chunk = tiny_model.forward(["we", "use"], task_name="chunk")
        assert not np.allclose(kp, chunk)

    def test_unknown_task(self, tiny_model):
        with pytest.raises(TaskError):
            tiny_model.forward(["we"], task_name="nope")


class TestSentenceLoss:
    def test_single_token_equals_one_cross_entropy(self, tiny_model):
        loss = tiny_model.sentence_loss(["oracle"], ("B-Task",))
        probs = tiny_model.forward(["oracle"])
        expected = -np.log(probs[0, tiny_model.main_task.tag_index("B-Task")])
        assert float(loss.value) == pytest.approx(expected, abs=1e-12)

    def test_uniform_logits_give_n_log_k(self, tiny_model):
        for _, node in tiny_model.parameters():
            node.value = np.zeros_like(node.value)
        loss = tiny_model.sentence_loss(
            ["we", "use", "an", "oracle"], ("O", "O", "B-Task", "I-Task")
        )
        assert float(loss.value) == pytest.approx(4 * np.log(3), abs=1e-12)

    def test_equals_sum_of_per_token_losses(self, tiny_model):
        tokens = ["we", "use", "an", "oracle"]
        gold = ("O", "B-Task", "I-Task", "O")
        loss = tiny_model.sentence_loss(tokens, gold)
        probs = tiny_model.forward(tokens)
        expected = sum(
            -np.log(probs[i, tiny_model.main_task.tag_index(g)])
            for i, g in enumerate(gold)
        )
        assert float(loss.value) == pytest.approx(expected, abs=1e-10)

    def test_tag_outside_tagset(self, tiny_model):
        with pytest.raises(LabelError):
            tiny_model.sentence_loss(["we"], ("B-Unknown",))

    def test_length_mismatch(self, tiny_model):
        with pytest.raises(LabelError):
            tiny_model.sentence_loss(["we", "use"], ("O",))


class TestPredict:
    def test_bias_favoring_outside_predicts_all_outside(self, tiny_model):
        for _, node in tiny_model.parameters():
            node.value = np.zeros_like(node.value)
        _, b = tiny_model.heads["kp"]
        b.value = np.array([10.0, 0.0, 0.0])  # tagset starts with O
        assert tiny_model.predict(["we", "use", "an", "oracle"]) == ("O",) * 4

    def test_deterministic(self, tiny_model):
        tokens = ["we", "use", "an", "oracle"]
        assert tiny_model.predict(tokens) == tiny_model.predict(tokens)

    def test_raw_argmax_gets_bio_repair(self, tiny_model, monkeypatch):
        # rig forward to produce raw argmax (O, I-Task)
        rigged = np.array([[0.8, 0.1, 0.1], [0.1, 0.2, 0.7]])
        monkeypatch.setattr(
            tiny_model, "forward", lambda tokens, task_name, train_mode: rigged
        )
        assert tiny_model.predict(["we", "use"]) == ("O", "B-Task")

    def test_output_always_well_formed(self):
        rng = np.random.default_rng(1)
        vocab = Vocabulary([f"w{i}" for i in range(10)])
        task = TaskSpec(0, "kp", ("O", "B-A", "I-A", "B-B", "I-B"), is_main=True)
        for seed in range(3):
            model = TaggerModel(
                TaggerConfig(embed_dim=3, hidden_dim=3, layers=1, input_dropout=0.0, seed=seed),
                vocab,
                [task],
            )
            for _ in range(5):
                tokens = [f"w{int(rng.integers(10))}" for _ in range(int(rng.integers(1, 7)))]
                assert is_well_formed(model.predict(tokens))


class TestParameterSharing:
    def test_mutating_other_head_leaves_task_output_unchanged(self, tiny_model):
        before = tiny_model.forward(["we", "use", "an", "oracle"], task_name="kp")
        w, b = tiny_model.heads["chunk"]
        w.value = w.value + 123.0
        b.value = b.value - 7.0
        after = tiny_model.forward(["we", "use", "an", "oracle"], task_name="kp")
        assert np.array_equal(before, after)

    def test_mutating_encoder_changes_all_tasks(self, tiny_model):
        kp_before = tiny_model.forward(["we", "oracle"], task_name="kp")
        chunk_before = tiny_model.forward(["we", "oracle"], task_name="chunk")
        fwd, _ = tiny_model.layers[0]
        fwd.w["input"].value = fwd.w["input"].value + 0.5
        assert not np.array_equal(kp_before, tiny_model.forward(["we", "oracle"], task_name="kp"))
        assert not np.array_equal(
            chunk_before, tiny_model.forward(["we", "oracle"], task_name="chunk")
        )

    def test_shared_parameters_exclude_heads(self, tiny_model):
        names = [name for name, _ in tiny_model.shared_parameters()]
        assert all(not n.startswith("head.") for n in names)
        assert "embeddings" in names

    def test_freeze_embeddings_switch(self):
        vocab = Vocabulary(["tok"])
        task = TaskSpec(0, "kp", ("O", "B-X"), is_main=True)
        config = TaggerConfig(
            embed_dim=2, hidden_dim=2, layers=1, input_dropout=0.0, seed=0,
            freeze_embeddings=True,
        )
        model = TaggerModel(config, vocab, [task])
        assert "embeddings" not in [n for n, _ in model.shared_parameters()]
        assert "embeddings" in [n for n, _ in model.parameters()]


class TestModelValidation:
    def test_exactly_one_main_task(self):
        vocab = Vocabulary(["a"])
        t0 = TaskSpec(0, "x", ("O",), is_main=True)
        t1 = TaskSpec(1, "y", ("O",), is_main=True)
        with pytest.raises(DataError):
            TaggerModel(TaggerConfig(), vocab, [t0, t1])
        with pytest.raises(DataError):
            TaggerModel(TaggerConfig(), vocab, [TaskSpec(0, "x", ("O",), is_main=False)])

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            TaggerConfig(layers=0)
        with pytest.raises(ConfigError):
            TaggerConfig(input_dropout=1.0)
        with pytest.raises(ConfigError):
            TaggerConfig(cell_variant="peephole")

    def test_head_arity_matches_tagset(self, tiny_model):
        w, b = tiny_model.heads["kp"]
        assert w.value.shape == (6, 3)
        assert b.value.shape == (3,)

    def test_three_layers_by_default(self):
        vocab = Vocabulary(["a"])
        task = TaskSpec(0, "x", ("O", "B-X"), is_main=True)
        model = TaggerModel(TaggerConfig(), vocab, [task])
        assert len(model.layers) == 3


def test_small_end_to_end_gradient_check(tiny_model):
    """Analytic gradients of sentence_loss match central differences for a
    few parameters of every kind (full sweep lives in the acceptance suite)."""
    tokens = ["we", "use", "an", "oracle"]
    gold = ("O", "B-Task", "I-Task", "O")

    def loss_value():
        return float(tiny_model.sentence_loss(tokens, gold).value)

    loss = tiny_model.sentence_loss(tokens, gold)
    ad.backward(loss)
    picked = {
        name: node
        for name, node in tiny_model.parameters()
        if name in (
            "embeddings",
            "layer0.fwd.W_input",
            "layer1.bwd.U_forget",
            "layer2.fwd.b_candidate",
            "head.kp.W",
            "head.chunk.b",
        )
    }
    assert len(picked) == 6
    for name, node in picked.items():
        numeric = central_difference(loss_value, node.value)
        analytic = node.grad if node.grad is not None else np.zeros_like(node.value)
        assert max_rel_error(analytic, numeric) < 1e-4, name
