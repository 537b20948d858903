"""Contextual-encoder contract, reference encoder, and the CVS1 vector store.

The reference encoder is a deterministic stand-in for a transformer: each
token gets a unit pseudo-random base vector keyed by (seed, token), and the
layer-``i`` representation of a target interpolates between its own base
vector and the mean of its context's base vectors. Masked encoding drops the
target entirely and returns the normalized context mean, so it depends only
on the context — exactly the property the downstream sampling strategies
are designed to exploit.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import CorpusStore
from .errors import DataError, StoreFormatError
from .topics import MentionSample


class Mode(Enum):
    UNMASKED = 0
    MASKED = 1


@dataclass
class EncodeRequest:
    mention_id: int
    tokens: list[str]
    token_index: int
    mode: Mode


@dataclass
class LayerVectors:
    """Per-layer vectors for one mention; masked requests carry exactly one."""

    mention_id: int
    mode: Mode
    layers: np.ndarray  # (layer_count, dim) float32


class ReferenceEncoder:
    """Hash-seeded encoder: deterministic, context-sensitive, transformer-free."""

    def __init__(self, seed: int, n_layers: int = 4, dim: int = 32):
        if n_layers < 1:
            raise ValueError("n_layers must be >= 1")
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.seed = seed
        self.n_layers = n_layers
        self.dim = dim
        self._base_cache: dict[str, np.ndarray] = {}

    def base_vector(self, token: str) -> np.ndarray:
        """Unit vector derived only from (seed, token)."""
        vec = self._base_cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(
                f"{self.seed}\x00{token}".encode("utf-8"), digest_size=8
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            raw = rng.standard_normal(self.dim)
            vec = raw / np.linalg.norm(raw)
            self._base_cache[token] = vec
        return vec

    def encode(self, req: EncodeRequest) -> LayerVectors:
        if not 0 <= req.token_index < len(req.tokens):
            raise DataError(
                f"token_index {req.token_index} out of range for sentence of "
                f"length {len(req.tokens)}"
            )
        context = [t for i, t in enumerate(req.tokens) if i != req.token_index]

        if req.mode is Mode.MASKED:
            if not context:
                raise DataError("masked encoding needs at least one context token")
            mean = np.mean([self.base_vector(t) for t in context], axis=0)
            out = _normalize(mean)
            return LayerVectors(req.mention_id, Mode.MASKED, out[None, :].astype(np.float32))

        target = self.base_vector(req.tokens[req.token_index])
        if context:
            mean = np.mean([self.base_vector(t) for t in context], axis=0)
        else:
            mean = target  # no context to mix in; every layer reduces to the base vector
        layers = np.empty((self.n_layers + 1, self.dim))
        for level in range(self.n_layers + 1):
            gamma = level / self.n_layers
            layers[level] = _normalize((1.0 - gamma) * target + gamma * mean)
        return LayerVectors(req.mention_id, Mode.UNMASKED, layers.astype(np.float32))


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm < 1e-12:
        raise DataError("vector cancelled to zero and cannot be normalized")
    return vec / norm


# ---------------------------------------------------------------------------
# CVS1 binary store
# ---------------------------------------------------------------------------

_MAGIC = b"CVS1"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIBQ")  # magic, version, dim, layer_count, mode, record_count
_REC_ID = struct.Struct("<Q")


@dataclass
class VectorStore:
    dim: int
    layer_count: int
    mode: Mode
    records: dict[int, np.ndarray]  # mention_id -> (layer_count, dim) float32

    def __contains__(self, mention_id: int) -> bool:
        return mention_id in self.records

    def get(self, mention_id: int) -> np.ndarray:
        try:
            return self.records[mention_id]
        except KeyError:
            raise DataError(f"vector store has no record for mention {mention_id}") from None


def write_store(records: Iterable[LayerVectors], path: str | Path) -> int:
    """Write records in CVS1 format; duplicates of a mention_id keep the first.

    Returns the number of records written. All records must agree on
    (dim, layer_count, mode).
    """
    seen: dict[int, LayerVectors] = {}
    dim = layer_count = None
    mode = None
    for rec in records:
        lc, d = rec.layers.shape
        if dim is None:
            dim, layer_count, mode = d, lc, rec.mode
        elif (d, lc, rec.mode) != (dim, layer_count, mode):
            raise StoreFormatError(
                f"heterogeneous records: ({d}, {lc}, {rec.mode.name}) vs "
                f"({dim}, {layer_count}, {mode.name})"
            )
        if rec.mention_id not in seen:
            seen[rec.mention_id] = rec
    if dim is None:
        raise StoreFormatError("cannot write an empty vector store")

    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, dim, layer_count, mode.value, len(seen)))
        for mention_id in sorted(seen):
            fh.write(_REC_ID.pack(mention_id))
            fh.write(np.ascontiguousarray(seen[mention_id].layers, dtype="<f4").tobytes())
    return len(seen)


def read_store(path: str | Path) -> VectorStore:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise StoreFormatError(f"{path}: file shorter than CVS1 header")
    magic, version, dim, layer_count, mode_val, record_count = _HEADER.unpack_from(blob, 0)
    if magic != _MAGIC:
        raise StoreFormatError(f"{path}: bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise StoreFormatError(f"{path}: unsupported version {version}")
    try:
        mode = Mode(mode_val)
    except ValueError:
        raise StoreFormatError(f"{path}: unknown mode byte {mode_val}") from None

    payload = layer_count * dim * 4
    rec_size = _REC_ID.size + payload
    offset = _HEADER.size
    records: dict[int, np.ndarray] = {}
    for _ in range(record_count):
        if offset + rec_size > len(blob):
            raise StoreFormatError(
                f"{path}: truncated record ({record_count} declared, "
                f"{len(records)} complete)"
            )
        (mention_id,) = _REC_ID.unpack_from(blob, offset)
        if mention_id in records:
            raise StoreFormatError(f"{path}: duplicate record for mention {mention_id}")
        vecs = np.frombuffer(blob, dtype="<f4", count=layer_count * dim,
                             offset=offset + _REC_ID.size)
        records[mention_id] = vecs.reshape(layer_count, dim).copy()
        offset += rec_size
    if offset != len(blob):
        raise StoreFormatError(f"{path}: {len(blob) - offset} trailing bytes after records")
    return VectorStore(dim=dim, layer_count=layer_count, mode=mode, records=records)


# ---------------------------------------------------------------------------
# Mention manifest (feeds any encoder, including the external extractor)
# ---------------------------------------------------------------------------


@dataclass
class ManifestEntry:
    mention_id: int
    word: str
    tokens: list[str]
    token_index: int
    mode: Mode
    topic_id: int | None  # None for random samples


def emit_manifest(
    samples: Sequence[MentionSample],
    store: CorpusStore,
    mode: Mode,
    path: str | Path,
) -> int:
    """One JSON line per (sample, mention) pair; returns the line count.

    The same mention may appear under several samples; each appearance gets
    its own line with that sample's topic_id.
    """
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            for m in sample.mentions:
                try:
                    tokens = store.sentence_tokens(m.doc_id, m.sent_id)
                except IndexError:
                    raise DataError(
                        f"dangling mention reference: doc {m.doc_id} sent {m.sent_id}"
                    ) from None
                if not 0 <= m.token_index < len(tokens) or tokens[m.token_index] != m.word:
                    raise DataError(
                        f"dangling mention reference: token {m.token_index} of "
                        f"doc {m.doc_id} sent {m.sent_id} is not {m.word!r}"
                    )
                rec = {
                    "mention_id": m.mention_id,
                    "word": m.word,
                    "tokens": tokens,
                    "token_index": m.token_index,
                    "mode": mode.name,
                    "topic_id": "RANDOM" if sample.topic_id is None else sample.topic_id,
                }
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
                n += 1
    return n


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            topic = rec["topic_id"]
            entries.append(
                ManifestEntry(
                    mention_id=rec["mention_id"],
                    word=rec["word"],
                    tokens=rec["tokens"],
                    token_index=rec["token_index"],
                    mode=Mode[rec["mode"]],
                    topic_id=None if topic == "RANDOM" else int(topic),
                )
            )
    return entries


def encode_manifest(entries: Sequence[ManifestEntry], encoder: ReferenceEncoder,
                    mode: Mode) -> list[LayerVectors]:
    """Run the reference encoder over manifest entries of the given mode,
    deduplicating mention ids (encodings are topic-independent)."""
    out = []
    seen: set[int] = set()
    for e in entries:
        if e.mode is not mode or e.mention_id in seen:
            continue
        seen.add(e.mention_id)
        out.append(encoder.encode(EncodeRequest(e.mention_id, e.tokens, e.token_index, mode)))
    return out
