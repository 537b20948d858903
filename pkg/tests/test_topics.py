"""Gibbs LDA, topic importance, relevant-topic selection, mention sampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topicvec.corpus import (
    Mention,
    MentionIndex,
    build_mention_index,
    build_vocabulary,
    ingest_corpus,
)
from topicvec.errors import DataError, UnknownWordError
from topicvec.synth import planted_topic_corpus
from topicvec.topics import (
    GibbsSampler,
    TopicImportance,
    TopicModel,
    fit_lda,
    read_topic_model,
    select_random_mentions,
    select_relevant_topics,
    select_topic_mentions,
    topic_summaries,
    word_topic_importance,
    write_topic_model,
)


def _store_from_lines(tmp_path, lines, name="c.tsv"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return ingest_corpus(path)


def _toy_model(doc_topics, vocab=("v",)):
    doc_topics = np.asarray(doc_topics, dtype=np.float64)
    k = doc_topics.shape[1]
    phi = np.full((k, len(vocab)), 1.0 / len(vocab))
    return TopicModel(
        n_topics=k, alpha=0.1, beta=0.1, seed=0, iterations=0,
        vocab_words=list(vocab), phi=phi, doc_topics=doc_topics,
    )


def _index(postings):
    return MentionIndex({
        w: [Mention(i, w, *coords) for i, coords in enumerate(items)]
        for w, items in postings.items()
    })


class TestGibbsSampler:
    def test_paper_default_shape(self, tmp_path):
        lines = [f"d{i}\t" + " ".join(f"w{j}" for j in range(30)) for i in range(40)]
        store = _store_from_lines(tmp_path, lines)
        model = fit_lda(store, 25, alpha=0.0001, iterations=5, seed=0,
                        drop_top=0, min_freq=1)
        assert model.n_topics == 25
        assert model.alpha == 0.0001
        assert model.beta == pytest.approx(1 / 25)

    def test_single_document_counts_stay_consistent(self, tmp_path):
        store = _store_from_lines(tmp_path, ["d\t" + "a b c d e f g h " * 4])
        sampler = GibbsSampler(store, n_topics=2, alpha=0.1, seed=3,
                               drop_top=0, min_freq=1)
        for _ in range(10):
            sampler.sweep(1)
            assert (sampler.doc_topic_counts.sum(axis=1) == sampler.doc_lengths).all()
            assert (sampler.doc_topic_counts.sum(axis=0) == sampler.topic_counts).all()
            assert (sampler.topic_word_counts.sum(axis=1) == sampler.topic_counts).all()
        tau = sampler.to_model().doc_topics
        np.testing.assert_allclose(tau.sum(axis=1), 1.0, atol=1e-9)
        assert (tau >= 0).all()

    def test_deterministic_given_seed(self, tmp_path):
        lines, _, _ = planted_topic_corpus(n_topics=3, n_docs=60, words_per_topic=10,
                                           tokens_per_doc=20, seed=5)
        store = _store_from_lines(tmp_path, lines)
        kwargs = dict(n_topics=3, alpha=0.1, beta=0.05, iterations=30, seed=11,
                      drop_top=0, min_freq=1)
        m1, m2 = fit_lda(store, **kwargs), fit_lda(store, **kwargs)
        assert np.array_equal(m1.phi, m2.phi)
        assert np.array_equal(m1.doc_topics, m2.doc_topics)
        m3 = fit_lda(store, **{**kwargs, "seed": 12})
        assert not np.array_equal(m1.doc_topics, m3.doc_topics)

    def test_distributions_are_normalized(self, tmp_path):
        lines, _, _ = planted_topic_corpus(n_topics=3, n_docs=40, words_per_topic=8,
                                           tokens_per_doc=15, seed=2)
        model = fit_lda(_store_from_lines(tmp_path, lines), 3, alpha=0.2,
                        iterations=20, seed=0, drop_top=0, min_freq=1)
        np.testing.assert_allclose(model.phi.sum(axis=1), 1.0, atol=1e-9)
        np.testing.assert_allclose(model.doc_topics.sum(axis=1), 1.0, atol=1e-9)

    def test_frequency_filters_shape_sampler_vocab(self, tmp_path):
        text = "common " * 50 + "mid " * 10 + "rare"
        store = _store_from_lines(tmp_path, [f"d\t{text}", f"e\t{text}"])
        sampler = GibbsSampler(store, 2, alpha=0.1, seed=0, drop_top=1, min_freq=5)
        assert sampler.vocab_words == ["mid"]

    def test_zero_eligible_tokens(self, tmp_path):
        store = _store_from_lines(tmp_path, ["d\ta b c"])
        with pytest.raises(DataError, match="eligible"):
            GibbsSampler(store, 2, alpha=0.1, seed=0, drop_top=0, min_freq=10)

    def test_model_round_trip(self, tmp_path):
        lines, _, _ = planted_topic_corpus(n_topics=2, n_docs=30, words_per_topic=6,
                                           tokens_per_doc=12, seed=8)
        model = fit_lda(_store_from_lines(tmp_path, lines), 2, alpha=0.3,
                        iterations=10, seed=4, drop_top=0, min_freq=1)
        write_topic_model(model, tmp_path / "m.bin")
        loaded = read_topic_model(tmp_path / "m.bin")
        assert loaded.vocab_words == model.vocab_words
        assert np.array_equal(loaded.phi, model.phi)
        assert np.array_equal(loaded.doc_topics, model.doc_topics)
        assert (loaded.n_topics, loaded.alpha, loaded.beta) == (2, 0.3, model.beta)

    def test_truncated_model_file_rejected(self, tmp_path):
        lines, _, _ = planted_topic_corpus(n_topics=2, n_docs=20, words_per_topic=5,
                                           tokens_per_doc=10, seed=1)
        model = fit_lda(_store_from_lines(tmp_path, lines), 2, alpha=0.3,
                        iterations=5, seed=4, drop_top=0, min_freq=1)
        write_topic_model(model, tmp_path / "m.bin")
        blob = (tmp_path / "m.bin").read_bytes()
        (tmp_path / "bad.bin").write_bytes(blob[:-8])
        with pytest.raises(DataError):
            read_topic_model(tmp_path / "bad.bin")

    def test_topic_summaries_ordering(self):
        model = _toy_model([[1.0, 0.0]], vocab=["a", "b", "c"])
        model.phi = np.array([[0.5, 0.3, 0.2], [0.1, 0.2, 0.7]])
        summaries = topic_summaries(model, top_n=2)
        assert summaries[0]["top_words"] == ["a", "b"]
        assert summaries[1]["top_words"] == ["c", "b"]


class TestWordTopicImportance:
    def test_hand_example(self):
        model = _toy_model([[0.7, 0.3], [0.2, 0.8]])
        index = _index({"w": [(0, 0, 0), (1, 0, 1), (1, 1, 0)]})
        got = word_topic_importance(model, index, "w")
        np.testing.assert_allclose(
            got.weights, [(0.7 + 0.2 + 0.2) / 3, (0.3 + 0.8 + 0.8) / 3], atol=1e-12
        )

    def test_single_document_identity(self):
        model = _toy_model([[0.25, 0.75]])
        index = _index({"w": [(0, 0, 0)]})
        np.testing.assert_array_equal(
            word_topic_importance(model, index, "w").weights, [0.25, 0.75]
        )

    def test_uniform_documents_give_uniform_importance(self):
        model = _toy_model([[0.5, 0.5]] * 4)
        index = _index({"w": [(0, 0, 0), (2, 0, 0), (3, 0, 0)]})
        np.testing.assert_allclose(
            word_topic_importance(model, index, "w").weights, [0.5, 0.5], atol=1e-12
        )

    def test_matches_brute_force_exactly(self):
        rng = np.random.default_rng(0)
        raw = rng.dirichlet(np.ones(7), size=30)
        model = _toy_model(raw)
        coords = [(int(d), 0, int(t)) for d, t in
                  zip(rng.integers(0, 30, 50), rng.integers(0, 5, 50))]
        index = _index({"w": coords})
        got = word_topic_importance(model, index, "w").weights

        expected = np.zeros(7)
        for m in index.mentions("w"):
            expected += model.doc_topics[m.doc_id]
        expected = expected / len(index.mentions("w"))
        assert np.array_equal(got, expected)

    def test_unknown_word(self):
        with pytest.raises(UnknownWordError):
            word_topic_importance(_toy_model([[1.0]]), _index({}), "nope")


class TestSelectRelevantTopics:
    def test_prefix_reaches_threshold(self):
        imp = TopicImportance("w", np.array([0.5, 0.3, 0.1, 0.05, 0.05]))
        got = select_relevant_topics(imp, 0.6, 6)
        assert got.topic_ids == [0, 1]
        assert got.cumulative == pytest.approx(0.8)

    def test_single_dominant_topic(self):
        imp = TopicImportance("w", np.array([0.0, 1.0, 0.0]))
        assert select_relevant_topics(imp, 0.6, 6).topic_ids == [1]

    def test_cap_overrides_threshold(self):
        imp = TopicImportance("w", np.full(25, 0.04))
        got = select_relevant_topics(imp, 0.6, 6)
        assert got.topic_ids == [0, 1, 2, 3, 4, 5]
        assert got.cumulative == pytest.approx(0.24)

    def test_ties_break_by_ascending_topic_id(self):
        imp = TopicImportance("w", np.array([0.25, 0.25, 0.25, 0.25]))
        assert select_relevant_topics(imp, 0.6, 6).topic_ids == [0, 1, 2]

    @given(weights=st.lists(st.floats(0.01, 1.0), min_size=2, max_size=25),
           threshold=st.floats(0.05, 1.0), cap=st.integers(1, 8))
    @settings(max_examples=200, deadline=None)
    def test_minimality_and_cap(self, weights, threshold, cap):
        tau = np.asarray(weights) / np.sum(weights)
        got = select_relevant_topics(TopicImportance("w", tau), threshold, cap)
        assert 1 <= len(got.topic_ids) <= cap
        ordered = sorted(range(len(tau)), key=lambda i: (-tau[i], i))
        assert got.topic_ids == ordered[: len(got.topic_ids)]
        if got.cumulative >= threshold and len(got.topic_ids) > 1:
            assert sum(tau[t] for t in got.topic_ids[:-1]) < threshold
        if got.cumulative < threshold:
            assert len(got.topic_ids) == cap


class TestSelectTopicMentions:
    @staticmethod
    def _fixture(tmp_path):
        lines = [
            "A\tw one. w two. w three. filler here",
            "B\tw b1. w b2. w b3. w b4",
        ]
        store = _store_from_lines(tmp_path, lines)
        index = build_mention_index(store, build_vocabulary(store, 1))
        model = _toy_model([[0.9, 0.1], [0.5, 0.5]])
        return index, model

    def test_ranked_walk(self, tmp_path):
        index, model = self._fixture(tmp_path)
        got = select_topic_mentions(index, model, "w", 0, 5)
        assert [(m.doc_id, m.sent_id) for m in got.mentions] == [
            (0, 0), (0, 1), (0, 2), (1, 0), (1, 1),
        ]

    def test_exhaustion_returns_all(self, tmp_path):
        index, model = self._fixture(tmp_path)
        got = select_topic_mentions(index, model, "w", 0, 100)
        assert len(got.mentions) == 7
        assert got.n_requested == 100

    def test_tie_prefers_lower_doc_id(self, tmp_path):
        index, _ = self._fixture(tmp_path)
        model = _toy_model([[0.5, 0.5], [0.5, 0.5]])
        got = select_topic_mentions(index, model, "w", 0, 4)
        assert [m.doc_id for m in got.mentions] == [0, 0, 0, 1]

    def test_one_context_per_sentence(self, tmp_path):
        store = _store_from_lines(tmp_path, ["A\tw and w and w again"])
        index = build_mention_index(store, build_vocabulary(store, 1))
        got = select_topic_mentions(index, _toy_model([[1.0, 0.0]]), "w", 0, 5)
        assert [(m.sent_id, m.token_index) for m in got.mentions] == [(0, 0)]

    def test_prefix_monotone_in_n(self, tmp_path):
        index, model = self._fixture(tmp_path)
        samples = [select_topic_mentions(index, model, "w", 1, n) for n in range(1, 8)]
        for small, big in zip(samples, samples[1:]):
            assert big.mentions[: len(small.mentions)] == small.mentions

    def test_unknown_word(self, tmp_path):
        index, model = self._fixture(tmp_path)
        with pytest.raises(UnknownWordError):
            select_topic_mentions(index, model, "zzz", 0, 3)


class TestSelectRandomMentions:
    def _index(self, n):
        return _index({"w": [(d, 0, 0) for d in range(n)]})

    def test_exhaustion(self):
        got = select_random_mentions(self._index(100), "w", 500, seed=0)
        assert len(got.mentions) == 100
        assert len({(m.doc_id, m.sent_id, m.token_index) for m in got.mentions}) == 100

    def test_same_seed_same_sample(self):
        a = select_random_mentions(self._index(30), "w", 10, seed=42)
        b = select_random_mentions(self._index(30), "w", 10, seed=42)
        assert a.mentions == b.mentions
        c = select_random_mentions(self._index(30), "w", 10, seed=43)
        assert a.mentions != c.mentions

    def test_uniformity_over_seeds(self):
        index = self._index(10)
        hits = np.zeros(10)
        n_seeds = 2000
        for seed in range(n_seeds):
            for m in select_random_mentions(index, "w", 5, seed=seed).mentions:
                hits[m.doc_id] += 1
        freq = hits / n_seeds
        np.testing.assert_allclose(freq, 0.5, atol=0.05)
