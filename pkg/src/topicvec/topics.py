"""LDA topic model and topic-guided mention sampling.

The sampler is collapsed Gibbs with a fixed sweep budget; document-topic
and topic-word distributions are read off the final count matrices. A
small explicit PRNG (splitmix64) is threaded through the jitted kernels so
every chain is deterministic given its seed and independent of global RNG
state.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .corpus import CorpusStore, Mention, MentionIndex
from .errors import DataError

_U64_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True, inline="always")
def _next_uniform(state):
    # splitmix64, mapped to a double in [0, 1)
    state[0] = (state[0] + np.uint64(0x9E3779B97F4A7C15)) & _U64_MASK
    z = state[0]
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _U64_MASK
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _U64_MASK
    z = z ^ (z >> np.uint64(31))
    return np.float64(z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _init_assignments(doc_ids, word_ids, n_topics, n_docs, n_words, state):
    n = doc_ids.shape[0]
    z = np.empty(n, dtype=np.int32)
    n_dk = np.zeros((n_docs, n_topics), dtype=np.int64)
    n_kv = np.zeros((n_topics, n_words), dtype=np.int64)
    n_k = np.zeros(n_topics, dtype=np.int64)
    for t in range(n):
        k = int(_next_uniform(state) * n_topics)
        if k == n_topics:
            k = n_topics - 1
        z[t] = k
        n_dk[doc_ids[t], k] += 1
        n_kv[k, word_ids[t]] += 1
        n_k[k] += 1
    return z, n_dk, n_kv, n_k


@njit(cache=True)
def _gibbs_sweeps(doc_ids, word_ids, z, n_dk, n_kv, n_k, alpha, beta, sweeps, state):
    n_topics = n_dk.shape[1]
    vbeta = n_kv.shape[1] * beta
    probs = np.empty(n_topics)
    for _ in range(sweeps):
        for t in range(doc_ids.shape[0]):
            d = doc_ids[t]
            w = word_ids[t]
            old = z[t]
            n_dk[d, old] -= 1
            n_kv[old, w] -= 1
            n_k[old] -= 1
            total = 0.0
            for k in range(n_topics):
                p = (n_dk[d, k] + alpha) * (n_kv[k, w] + beta) / (n_k[k] + vbeta)
                probs[k] = p
                total += p
            u = _next_uniform(state) * total
            acc = 0.0
            new = n_topics - 1
            for k in range(n_topics):
                acc += probs[k]
                if u < acc:
                    new = k
                    break
            z[t] = new
            n_dk[d, new] += 1
            n_kv[new, w] += 1
            n_k[new] += 1


@dataclass
class TopicModel:
    n_topics: int
    alpha: float
    beta: float
    seed: int
    iterations: int
    vocab_words: list[str]
    phi: np.ndarray          # n_topics x |vocab_words|, rows sum to 1
    doc_topics: np.ndarray   # n_docs x n_topics, rows sum to 1


class GibbsSampler:
    """Mutable collapsed-Gibbs state over one corpus.

    Tokens dropped by the frequency filters never enter the sampler; the
    mention index is untouched by these filters. Exposes its count matrices
    so conservation can be checked from outside between sweeps.
    """

    def __init__(
        self,
        store: CorpusStore,
        n_topics: int,
        alpha: float,
        beta: float | None = None,
        seed: int = 0,
        drop_top: int = 100,
        min_freq: int = 5,
    ):
        if n_topics < 2:
            raise ValueError("n_topics must be >= 2")
        if alpha <= 0:
            raise ValueError("alpha must be > 0")
        if beta is None:
            beta = 1.0 / n_topics
        if beta <= 0:
            raise ValueError("beta must be > 0")

        counts: Counter[str] = Counter()
        for doc in store.documents:
            for sent in doc.sentences:
                counts.update(sent.tokens)
        by_rank = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        dropped = {w for w, _ in by_rank[:drop_top]}
        self.vocab_words = sorted(
            w for w, n in counts.items() if n >= min_freq and w not in dropped
        )
        word_to_id = {w: i for i, w in enumerate(self.vocab_words)}

        doc_ids: list[int] = []
        word_ids: list[int] = []
        for doc_id, _sent_id, _tok_idx, tok in store.iter_tokens():
            wid = word_to_id.get(tok)
            if wid is not None:
                doc_ids.append(doc_id)
                word_ids.append(wid)
        if not doc_ids:
            raise DataError("corpus has zero LDA-eligible tokens after preprocessing")

        self.n_topics = n_topics
        self.alpha = alpha
        self.beta = beta
        self.seed = seed
        self.n_docs = len(store)
        self._doc_ids = np.asarray(doc_ids, dtype=np.int32)
        self._word_ids = np.asarray(word_ids, dtype=np.int32)
        self.doc_lengths = np.bincount(self._doc_ids, minlength=self.n_docs).astype(np.int64)

        self._state = np.array([np.uint64(seed) ^ np.uint64(0xD1B54A32D192ED03)], dtype=np.uint64)
        self.assignments, self.doc_topic_counts, self.topic_word_counts, self.topic_counts = (
            _init_assignments(
                self._doc_ids, self._word_ids, n_topics, self.n_docs,
                len(self.vocab_words), self._state,
            )
        )
        self.sweeps_done = 0

    def sweep(self, n: int = 1) -> None:
        _gibbs_sweeps(
            self._doc_ids, self._word_ids, self.assignments,
            self.doc_topic_counts, self.topic_word_counts, self.topic_counts,
            self.alpha, self.beta, n, self._state,
        )
        self.sweeps_done += n

    def to_model(self) -> TopicModel:
        n_words = len(self.vocab_words)
        phi = (self.topic_word_counts + self.beta) / (
            self.topic_counts[:, None] + n_words * self.beta
        )
        doc_topics = (self.doc_topic_counts + self.alpha) / (
            self.doc_lengths[:, None] + self.n_topics * self.alpha
        )
        return TopicModel(
            n_topics=self.n_topics,
            alpha=self.alpha,
            beta=self.beta,
            seed=self.seed,
            iterations=self.sweeps_done,
            vocab_words=list(self.vocab_words),
            phi=phi,
            doc_topics=doc_topics,
        )


def fit_lda(
    store: CorpusStore,
    n_topics: int,
    alpha: float,
    beta: float | None = None,
    iterations: int = 1000,
    seed: int = 0,
    drop_top: int = 100,
    min_freq: int = 5,
) -> TopicModel:
    """Fit by collapsed Gibbs sampling; deterministic given the seed."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    sampler = GibbsSampler(
        store, n_topics, alpha, beta=beta, seed=seed, drop_top=drop_top, min_freq=min_freq
    )
    sampler.sweep(iterations)
    return sampler.to_model()


# ---------------------------------------------------------------------------
# Topic importance and mention selection
# ---------------------------------------------------------------------------


@dataclass
class TopicImportance:
    word: str
    weights: np.ndarray  # length n_topics, sums to 1


@dataclass
class RelevantTopics:
    word: str
    topic_ids: list[int]   # descending importance, ties by ascending id
    cumulative: float


RANDOM_TOPIC = None  # sentinel topic for uniform mention samples


@dataclass
class MentionSample:
    word: str
    topic_id: int | None   # RANDOM_TOPIC for uniform samples
    mentions: list[Mention]
    n_requested: int


def word_topic_importance(model: TopicModel, index: MentionIndex, word: str) -> TopicImportance:
    """Average the document-topic vector over every mention of the word.

    A document with two mentions contributes its vector twice. Accumulation
    is sequential in mention order so results are reproducible exactly.
    """
    mentions = index.mentions(word)
    acc = np.zeros(model.n_topics)
    for m in mentions:
        acc += model.doc_topics[m.doc_id]
    return TopicImportance(word=word, weights=acc / len(mentions))


def select_relevant_topics(
    importance: TopicImportance, threshold: float, max_topics: int
) -> RelevantTopics:
    """Shortest descending-importance prefix reaching the cumulative threshold.

    The prefix is truncated to max_topics even if that leaves the
    cumulative weight below the threshold.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    if max_topics < 1:
        raise ValueError("max_topics must be >= 1")
    weights = importance.weights
    order = np.argsort(-weights, kind="stable")  # ties keep ascending topic id
    chosen: list[int] = []
    cumulative = 0.0
    for topic in order:
        chosen.append(int(topic))
        cumulative += float(weights[topic])
        if cumulative >= threshold:
            break
    if len(chosen) > max_topics:
        chosen = chosen[:max_topics]
        cumulative = float(sum(weights[t] for t in chosen))
    return RelevantTopics(word=importance.word, topic_ids=chosen, cumulative=cumulative)


def select_topic_mentions(
    index: MentionIndex, model: TopicModel, word: str, topic_id: int, n: int
) -> MentionSample:
    """Walk the word's documents from most to least topic-related, taking one
    context per mention-bearing sentence (its first occurrence), until n
    contexts are collected or the documents run out.

    Ties in the document ranking break toward the lower doc id, and within a
    document sentences come in corpus order, so for n' > n the smaller
    sample is a prefix of the larger one.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    mentions = index.mentions(word)

    per_doc: dict[int, list[Mention]] = {}
    for m in mentions:
        sentences = per_doc.setdefault(m.doc_id, [])
        # postings are in corpus order: keep only the first occurrence per sentence
        if not sentences or sentences[-1].sent_id != m.sent_id:
            sentences.append(m)

    ranked = sorted(per_doc, key=lambda d: (-model.doc_topics[d, topic_id], d))
    selected: list[Mention] = []
    for doc_id in ranked:
        for m in per_doc[doc_id]:
            selected.append(m)
            if len(selected) == n:
                return MentionSample(word, topic_id, selected, n)
    return MentionSample(word, topic_id, selected, n)


def select_random_mentions(index: MentionIndex, word: str, n: int, seed: int) -> MentionSample:
    """Uniform sample without replacement over all mentions of the word."""
    if n < 1:
        raise ValueError("n must be >= 1")
    mentions = index.mentions(word)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(mentions))
    chosen = [mentions[i] for i in order[: min(n, len(mentions))]]
    return MentionSample(word, RANDOM_TOPIC, chosen, n)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def write_topic_model(model: TopicModel, path: str | Path) -> None:
    """JSON header line, then raw little-endian f64 for phi and doc_topics."""
    header = {
        "n_topics": model.n_topics,
        "alpha": model.alpha,
        "beta": model.beta,
        "seed": model.seed,
        "iterations": model.iterations,
        "n_docs": int(model.doc_topics.shape[0]),
        "vocab": model.vocab_words,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(np.ascontiguousarray(model.phi, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.doc_topics, dtype="<f8").tobytes())


def read_topic_model(path: str | Path) -> TopicModel:
    blob = Path(path).read_bytes()
    nl = blob.find(b"\n")
    if nl < 0:
        raise DataError(f"topic model file {path} has no header line")
    header = json.loads(blob[:nl].decode("utf-8"))
    k, v, d = header["n_topics"], len(header["vocab"]), header["n_docs"]
    body = blob[nl + 1:]
    expected = (k * v + d * k) * 8
    if len(body) != expected:
        raise DataError(
            f"topic model file {path}: expected {expected} payload bytes, found {len(body)}"
        )
    phi = np.frombuffer(body[: k * v * 8], dtype="<f8").reshape(k, v).copy()
    doc_topics = np.frombuffer(body[k * v * 8:], dtype="<f8").reshape(d, k).copy()
    return TopicModel(
        n_topics=k,
        alpha=header["alpha"],
        beta=header["beta"],
        seed=header["seed"],
        iterations=header["iterations"],
        vocab_words=list(header["vocab"]),
        phi=phi,
        doc_topics=doc_topics,
    )


def topic_summaries(model: TopicModel, top_n: int = 10) -> list[dict]:
    """Top words per topic, for eyeballing what the sampler found."""
    summaries = []
    vocab = np.asarray(model.vocab_words)
    for k in range(model.n_topics):
        order = np.argsort(-model.phi[k], kind="stable")[:top_n]
        summaries.append({"topic_id": k, "top_words": [str(w) for w in vocab[order]]})
    return summaries
