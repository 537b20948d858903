"""Corpus ingestion, vocabulary building, and the word-mention inverted index.

Input is one document per line: ``name<TAB>text``. Tokenization is
deliberately simple and deterministic: text is lowercased, sentences are
split after ``.``/``!``/``?`` followed by whitespace, tokens are split on
whitespace, and leading/trailing punctuation is separated into standalone
single-character tokens (so ``"sat."`` yields ``sat`` and ``.``).
"""

from __future__ import annotations

import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .errors import CorpusFormatError, IndexMismatchError, UnknownWordError

_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+")


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(sentence: str) -> list[str]:
    """Lowercase and split one sentence into tokens.

    Edge punctuation is peeled off each whitespace chunk and emitted as
    separate single-character tokens, preserving text order.
    """
    tokens: list[str] = []
    for chunk in sentence.lower().split():
        start, end = 0, len(chunk)
        while start < end and _is_punct(chunk[start]):
            start += 1
        while end > start and _is_punct(chunk[end - 1]):
            end -= 1
        tokens.extend(chunk[:start])
        if start < end:
            tokens.append(chunk[start:end])
        tokens.extend(chunk[end:])
    return tokens


def split_sentences(text: str) -> list[list[str]]:
    """Split raw document text into non-empty token lists, one per sentence."""
    sentences = []
    for raw in _SENTENCE_BREAK.split(text):
        tokens = tokenize(raw)
        if tokens:
            sentences.append(tokens)
    return sentences


@dataclass
class Sentence:
    sent_id: int
    tokens: list[str]


@dataclass
class Document:
    doc_id: int
    name: str
    sentences: list[Sentence]


@dataclass
class CorpusStore:
    """Tokenized documents with dense, input-ordered ids. Immutable once built."""

    documents: list[Document]

    def __len__(self) -> int:
        return len(self.documents)

    def sentence_tokens(self, doc_id: int, sent_id: int) -> list[str]:
        return self.documents[doc_id].sentences[sent_id].tokens

    def iter_tokens(self) -> Iterator[tuple[int, int, int, str]]:
        """Yield (doc_id, sent_id, token_index, token) in corpus order."""
        for doc in self.documents:
            for sent in doc.sentences:
                for i, tok in enumerate(sent.tokens):
                    yield doc.doc_id, sent.sent_id, i, tok


@dataclass
class Vocabulary:
    entries: dict[str, int]
    min_count: int

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Mention:
    """One occurrence of a word: the token at ``token_index`` equals ``word``."""

    mention_id: int
    word: str
    doc_id: int
    sent_id: int
    token_index: int


@dataclass
class MentionIndex:
    postings: dict[str, list[Mention]]

    def mentions(self, word: str) -> list[Mention]:
        try:
            return self.postings[word]
        except KeyError:
            raise UnknownWordError(f"word not in mention index: {word!r}") from None

    def __contains__(self, word: str) -> bool:
        return word in self.postings


def ingest_corpus(path: str | Path) -> CorpusStore:
    """Parse a one-document-per-line corpus file into a CorpusStore.

    Record format: ``name<TAB>text``. Dense doc ids are assigned in file
    order. Completely empty lines are ignored; anything else malformed is
    reported with its line number.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusFormatError(f"cannot read corpus file {path}: {exc}") from exc

    documents: list[Document] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        name, tab, body = line.partition("\t")
        if not tab:
            raise CorpusFormatError(f"line {lineno}: missing tab separator")
        if not name.strip():
            raise CorpusFormatError(f"line {lineno}: empty document name")
        token_lists = split_sentences(body)
        if not token_lists:
            raise CorpusFormatError(f"line {lineno}: document has no tokens")
        doc_id = len(documents)
        sentences = [Sentence(i, toks) for i, toks in enumerate(token_lists)]
        documents.append(Document(doc_id, name.strip(), sentences))

    if not documents:
        raise CorpusFormatError("empty corpus")
    return CorpusStore(documents)


def build_vocabulary(store: CorpusStore, min_count: int) -> Vocabulary:
    """Keep exactly the words whose corpus frequency is >= min_count."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: Counter[str] = Counter()
    for doc in store.documents:
        for sent in doc.sentences:
            counts.update(sent.tokens)
    entries = {w: n for w, n in sorted(counts.items()) if n >= min_count}
    return Vocabulary(entries=entries, min_count=min_count)


def build_mention_index(store: CorpusStore, vocab: Vocabulary) -> MentionIndex:
    """Enumerate every occurrence of each vocabulary word, in corpus order.

    Mention ids are dense and global, assigned in the same walk order, so
    identical input always produces identical ids.
    """
    postings: dict[str, list[Mention]] = {w: [] for w in vocab.entries}
    mention_id = 0
    for doc_id, sent_id, token_index, tok in store.iter_tokens():
        if tok in postings:
            postings[tok].append(Mention(mention_id, tok, doc_id, sent_id, token_index))
            mention_id += 1

    for word, expected in vocab.entries.items():
        got = len(postings[word])
        if got != expected:
            raise IndexMismatchError(
                f"frequency mismatch for {word!r}: vocabulary says {expected}, "
                f"corpus walk found {got}"
            )
    return MentionIndex(postings)


# ---------------------------------------------------------------------------
# Persistence (JSON / JSON-lines artifacts)
# ---------------------------------------------------------------------------


def write_corpus_store(store: CorpusStore, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in store.documents:
            rec = {
                "doc_id": doc.doc_id,
                "name": doc.name,
                "sentences": [s.tokens for s in doc.sentences],
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_corpus_store(path: str | Path) -> CorpusStore:
    documents = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            sentences = [Sentence(i, toks) for i, toks in enumerate(rec["sentences"])]
            documents.append(Document(rec["doc_id"], rec["name"], sentences))
    return CorpusStore(documents)


def write_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    payload = {"min_count": vocab.min_count, "entries": vocab.entries}
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def read_vocabulary(path: str | Path) -> Vocabulary:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return Vocabulary(entries=dict(sorted(payload["entries"].items())), min_count=payload["min_count"])


def write_mention_index(index: MentionIndex, path: str | Path) -> None:
    """One JSON line per word: {"word": ..., "mentions": [[id, doc, sent, tok], ...]}."""
    with open(path, "w", encoding="utf-8") as fh:
        for word in sorted(index.postings):
            mentions = [
                [m.mention_id, m.doc_id, m.sent_id, m.token_index]
                for m in index.postings[word]
            ]
            fh.write(json.dumps({"word": word, "mentions": mentions}) + "\n")


def read_mention_index(path: str | Path) -> MentionIndex:
    postings: dict[str, list[Mention]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            word = rec["word"]
            postings[word] = [
                Mention(mid, word, doc, sent, tok) for mid, doc, sent, tok in rec["mentions"]
            ]
    return MentionIndex(postings)
