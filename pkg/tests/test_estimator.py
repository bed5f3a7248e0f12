import pytest
from sklearn.base import clone

from kbctag.errors import DataError
from kbctag.estimator import KeyphraseTagger

SENTS = [
    ["we", "use", "the", "lstm", "tagger"],
    ["the", "crf", "model", "works"],
    ["a", "svm", "variant", "works", "well"],
    ["the", "lstm", "model", "works"],
    ["we", "use", "a", "crf", "tagger"],
    ["a", "svm", "model", "works"],
]
TAGS = [
    ["O", "O", "O", "B-Method", "I-Method"],
    ["O", "B-Method", "I-Method", "O"],
    ["O", "B-Method", "I-Method", "O", "O"],
    ["O", "B-Method", "I-Method", "O"],
    ["O", "O", "O", "B-Method", "I-Method"],
    ["O", "B-Method", "I-Method", "O"],
]

FAST = dict(hidden_dim=10, embed_dim=10, layers=2, learning_rate=0.05, epochs=15, seed=3)


class TestSklearnContract:
    def test_get_params_round_trip(self):
        tagger = KeyphraseTagger(hidden_dim=17, epochs=3)
        params = tagger.get_params()
        assert params["hidden_dim"] == 17
        assert params["epochs"] == 3
        rebuilt = KeyphraseTagger(**params)
        assert rebuilt.get_params() == params

    def test_set_params(self):
        tagger = KeyphraseTagger()
        tagger.set_params(learning_rate=0.5, seed=9)
        assert tagger.learning_rate == 0.5
        assert tagger.seed == 9

    def test_clone(self):
        tagger = KeyphraseTagger(hidden_dim=12, epochs=2, seed=4)
        cloned = clone(tagger)
        assert cloned is not tagger
        assert cloned.get_params() == tagger.get_params()

    def test_fit_returns_self(self):
        tagger = KeyphraseTagger(**{**FAST, "epochs": 1})
        assert tagger.fit(SENTS, TAGS) is tagger


class TestFitPredict:
    def test_overfits_unigram_cues(self):
        tagger = KeyphraseTagger(**FAST)
        tagger.fit(SENTS, TAGS)
        pred = tagger.predict(SENTS)
        correct = total = 0
        for p_tags, g_tags in zip(pred, TAGS):
            correct += sum(p == g for p, g in zip(p_tags, g_tags))
            total += len(g_tags)
        assert correct / total >= 0.95
        assert tagger.score(SENTS, TAGS) >= 0.9

    def test_predict_shape_and_alphabet(self):
        tagger = KeyphraseTagger(**{**FAST, "epochs": 1})
        tagger.fit(SENTS, TAGS)
        pred = tagger.predict([["unseen", "words", "here"]])
        assert len(pred) == 1
        assert len(pred[0]) == 3
        assert all(t in ("O", "B-Method", "I-Method") for t in pred[0])

    def test_auxiliary_task_trains(self):
        tagger = KeyphraseTagger(**{**FAST, "epochs": 2})
        aux_x = [["the", "lstm"], ["a", "model"]]
        aux_y = [["B-NP", "I-NP"], ["B-NP", "I-NP"]]
        tagger.fit(SENTS, TAGS, aux_X=aux_x, aux_y=aux_y, aux_name="chunks")
        assert [t.name for t in tagger.tasks_] == ["main", "chunks"]
        # auxiliary head is usable too
        pred = tagger.predict([["the", "lstm"]], task="chunks")
        assert all(t in ("O", "B-NP", "I-NP") for t in pred[0])

    def test_same_seed_same_predictions(self):
        a = KeyphraseTagger(**{**FAST, "epochs": 2}).fit(SENTS, TAGS)
        b = KeyphraseTagger(**{**FAST, "epochs": 2}).fit(SENTS, TAGS)
        assert a.predict(SENTS) == b.predict(SENTS)

    def test_train_log_recorded(self):
        tagger = KeyphraseTagger(**{**FAST, "epochs": 2}).fit(SENTS, TAGS)
        assert len(tagger.train_log_) == 2
        assert tagger.train_log_[0].epoch == 1


class TestValidation:
    def test_rejects_string_input(self):
        with pytest.raises(DataError):
            KeyphraseTagger().fit("not tokenized", [["O"]])

    def test_rejects_untokenized_rows(self):
        with pytest.raises(DataError):
            KeyphraseTagger().fit(["a sentence"], [["O", "O"]])

    def test_rejects_misaligned_tags(self):
        with pytest.raises(DataError):
            KeyphraseTagger().fit([["a", "b"]], [["O"]])

    def test_rejects_aux_without_tags(self):
        with pytest.raises(DataError):
            KeyphraseTagger(**{**FAST, "epochs": 1}).fit(
                SENTS, TAGS, aux_X=[["a"]], aux_y=None
            )

    def test_unfitted_predict_raises(self):
        with pytest.raises(DataError):
            KeyphraseTagger().predict([["a"]])

    def test_repairs_ill_formed_training_tags(self):
        tagger = KeyphraseTagger(**{**FAST, "epochs": 1})
        tagger.fit([["a", "b"]], [["I-Method", "I-Method"]])
        assert "B-Method" in tagger.tasks_[0].tagset
