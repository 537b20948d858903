"""Deterministic synthetic corpora for tests, demos, and acceptance runs.

Two generators:

* ``planted_topic_corpus`` draws documents from known disjoint-vocabulary
  topic-word distributions, so a fitted topic model can be scored against
  the distributions that generated the data.

* ``property_probe_fixture`` builds a corpus where each target word's
  category is revealed only in a minority of its mentions: most mentions
  sit in generic documents full of word-specific filler, while a smaller
  share sits in category-cue documents. Random mention pooling therefore
  dilutes the category signal, while topic-partitioned pooling isolates it.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CATEGORIES = ("animal", "plant", "tool", "vehicle")


def planted_topic_corpus(
    n_topics: int = 5,
    n_docs: int = 1000,
    words_per_topic: int = 60,
    tokens_per_doc: int = 50,
    seed: int = 0,
) -> tuple[list[str], np.ndarray, list[str]]:
    """Corpus lines drawn from uniform per-topic word blocks.

    Returns (document lines, generating topic-word matrix, vocabulary); the
    matrix columns align with the returned vocabulary order.
    """
    rng = np.random.default_rng(seed)
    vocab = [f"t{k}w{i:03d}" for k in range(n_topics) for i in range(words_per_topic)]
    phi = np.zeros((n_topics, len(vocab)))
    for k in range(n_topics):
        phi[k, k * words_per_topic: (k + 1) * words_per_topic] = 1.0 / words_per_topic

    lines = []
    for d in range(n_docs):
        topic = d % n_topics
        ids = rng.choice(len(vocab), size=tokens_per_doc, p=phi[topic])
        text = " ".join(vocab[i] for i in ids)
        lines.append(f"doc{d:05d}\t{text}")
    return lines, phi, vocab


@dataclass
class PropertyFixture:
    corpus_lines: list[str]
    dataset_lines: list[str]
    words: list[str]
    categories: tuple[str, ...]


def property_probe_fixture(
    seed: int = 0,
    words_per_category: int = 30,
    generic_mentions: int = 12,
    cue_mentions: int = 8,
    cue_pool_size: int = 6,
    generic_pool_size: int = 40,
    sentences_per_doc: int = 4,
    distractor_cues: int = 1,
) -> PropertyFixture:
    """Corpus whose category signal lives only in minority-topic contexts.

    Each target word gets `generic_mentions` sentences inside generic
    documents and `cue_mentions` sentences inside category documents.
    Generic documents pack sentences about words of mixed categories, each
    full of shared filler, a word-specific token, and a cue drawn from a
    *wrong* category, so their contexts are uninformative or misleading.
    Category documents contain only same-category words with their cue
    vocabulary. Counts per word are exact: with 12 generic mentions split
    over two filler flavors and 8 cue mentions, a word's topic mass lands
    ~30/30/40, so the cue topic ranks first but needs a generic topic to
    clear the 60% cumulative threshold.
    """
    rng = np.random.default_rng(seed)
    words = [f"{cat}{i:02d}" for cat in CATEGORIES for i in range(words_per_category)]
    category_of = {w: w.rstrip("0123456789") for w in words}
    cue_pools = {
        cat: [f"{cat}cue{j}" for j in range(cue_pool_size)] for cat in CATEGORIES
    }
    generic_pools = [
        [f"gena{j:02d}" for j in range(generic_pool_size)],
        [f"genb{j:02d}" for j in range(generic_pool_size)],
    ]

    def generic_sentence(word: str, pool: list[str]) -> list[str]:
        toks = [pool[i] for i in rng.integers(0, len(pool), size=3)]
        others = [c for c in CATEGORIES if c != category_of[word]]
        for _ in range(distractor_cues):
            foreign = cue_pools[others[rng.integers(0, len(others))]]
            toks.append(foreign[rng.integers(0, len(foreign))])
        toks += [f"xx{word}", word]
        return [toks[i] for i in rng.permutation(len(toks))]

    def cue_sentence(word: str) -> list[str]:
        cue = cue_pools[category_of[word]]
        toks = [cue[i] for i in rng.integers(0, len(cue), size=4)] + [word]
        return [toks[i] for i in rng.permutation(len(toks))]

    def pack(sentences: list[list[str]]) -> list[str]:
        order = rng.permutation(len(sentences))
        docs = []
        for start in range(0, len(order), sentences_per_doc):
            chunk = [sentences[i] for i in order[start: start + sentences_per_doc]]
            docs.append(". ".join(" ".join(s) for s in chunk) + ".")
        return docs

    flavor_sentences: list[list[list[str]]] = [[], []]
    cue_sentences: dict[str, list[list[str]]] = {cat: [] for cat in CATEGORIES}
    for w in words:
        for m in range(generic_mentions):
            flavor_sentences[m % 2].append(generic_sentence(w, generic_pools[m % 2]))
        for _ in range(cue_mentions):
            cue_sentences[category_of[w]].append(cue_sentence(w))

    docs = pack(flavor_sentences[0]) + pack(flavor_sentences[1])
    for cat in CATEGORIES:
        docs += pack(cue_sentences[cat])
    order = rng.permutation(len(docs))
    corpus_lines = [f"d{di:05d}\t{docs[si]}" for di, si in enumerate(order)]
    dataset_lines = [f"{w}\t{category_of[w]}" for w in words]
    return PropertyFixture(corpus_lines, dataset_lines, words, CATEGORIES)


FIXTURE_CONFIG = """\
corpus={root}/corpus.tsv
out_dir={root}/out
dataset={root}/dataset.tsv
target_words={root}/words.txt
min_count=10
n_topics=6
alpha=0.05
beta=0.01
lda_iterations=200
lda_drop_top=1
lda_min_freq=5
threshold=0.6
max_topics=6
n_random=500
n_per_topic=8
encoder=reference
encoder_dim=24
encoder_layers=4
variant=T_mask
min_positives=10
grid_batch_sizes=8
grid_learning_rates=0.01,0.001
epochs=40
patience=10
seed={seed}
neighbors_k=5
"""


def write_property_fixture(out_dir: str | Path, seed: int = 0, **kwargs) -> Path:
    """Write corpus.tsv, dataset.tsv, words.txt, and a ready config file.

    Returns the path of the written config.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fixture = property_probe_fixture(seed=seed, **kwargs)
    (out / "corpus.tsv").write_text("\n".join(fixture.corpus_lines) + "\n", encoding="utf-8")
    (out / "dataset.tsv").write_text("\n".join(fixture.dataset_lines) + "\n", encoding="utf-8")
    (out / "words.txt").write_text("\n".join(fixture.words) + "\n", encoding="utf-8")
    config = out / "fixture.cfg"
    config.write_text(FIXTURE_CONFIG.format(root=out.resolve(), seed=seed), encoding="utf-8")
    return config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Generate the synthetic property-probing fixture."
    )
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    config = write_property_fixture(args.out, seed=args.seed)
    print(config)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
