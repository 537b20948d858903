"""Turn per-mention vectors into static word vectors, per strategy variant.

Single-vector strategies (C_mask, C_last, C_input, C_avg) pool one random
mention sample; C_all keeps one pooled vector per encoder layer; T_*
strategies pool one sample per relevant topic; A_* strategies average the
word's per-topic vectors. Also provides PCA reduction and cosine
nearest-neighbor inspection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .encoding import LayerVectors, Mode, VectorStore, read_store, write_store
from .errors import DataError, DegenerateAggregateError
from .topics import MentionSample

SINGLE_VARIANTS = ("C_mask", "C_last", "C_input", "C_avg", "A_mask", "A_last", "A_avg")
VARIANTS = SINGLE_VARIANTS + ("C_all", "T_mask", "T_last", "T_avg")

_MASKED_STRATEGIES = {"mask"}


def _strategy(variant: str) -> str:
    return variant.split("_", 1)[1]


def variant_mode(variant: str) -> Mode:
    return Mode.MASKED if _strategy(variant) in _MASKED_STRATEGIES else Mode.UNMASKED


@dataclass
class WordVector:
    word: str
    variant: str
    values: np.ndarray
    topic_id: int | None = None     # set for T_* vectors
    layer_index: int | None = None  # set for C_all vectors


def aggregate_mentions(vectors: Iterable[np.ndarray]) -> np.ndarray:
    """Sum the vectors and normalize; the unit vector along the mean."""
    rows = [np.asarray(v, dtype=np.float64) for v in vectors]
    if not rows:
        raise ValueError("cannot aggregate an empty vector list")
    total = rows[0].copy()
    for row in rows[1:]:
        total += row
    norm = float(np.linalg.norm(total))
    if norm < 1e-12:
        raise DegenerateAggregateError("mention vectors cancelled to zero")
    return total / norm


def _mention_vector(rec: np.ndarray, strategy: str) -> np.ndarray:
    if strategy == "mask":
        return rec[0]
    if strategy == "last":
        return rec[-1]
    if strategy == "input":
        return rec[0]
    if strategy == "avg":
        return rec.mean(axis=0)
    raise ValueError(f"no per-mention vector for strategy {strategy!r}")


def _sample_vectors(sample: MentionSample, store: VectorStore) -> list[np.ndarray]:
    out = []
    for m in sample.mentions:
        if m.mention_id not in store:
            raise DataError(
                f"vector store is missing mention {m.mention_id} of {sample.word!r}"
            )
        out.append(store.records[m.mention_id].astype(np.float64))
    return out


def build_variant(
    word: str,
    variant: str,
    samples: Sequence[MentionSample],
    store: VectorStore,
) -> list[WordVector]:
    """Build the word's vector(s) for one variant.

    C_* variants expect the word's random mention sample; T_* and A_*
    variants expect one sample per relevant topic. The store's mode must
    match the variant (masked strategies read masked stores).
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    strategy = _strategy(variant)
    if variant_mode(variant) is not store.mode:
        raise DataError(
            f"variant {variant} needs a {variant_mode(variant).name} store, "
            f"got {store.mode.name}"
        )

    if variant.startswith("C"):
        random_samples = [s for s in samples if s.topic_id is None]
        if len(random_samples) != 1:
            raise DataError(
                f"expected exactly one random mention sample for {word!r}, "
                f"got {len(random_samples)}"
            )
        recs = _sample_vectors(random_samples[0], store)
        if variant == "C_all":
            return [
                WordVector(word, variant, aggregate_mentions([r[level] for r in recs]),
                           layer_index=level)
                for level in range(store.layer_count)
            ]
        return [WordVector(word, variant,
                           aggregate_mentions([_mention_vector(r, strategy) for r in recs]))]

    topic_samples = [s for s in samples if s.topic_id is not None]
    if not topic_samples:
        raise DataError(f"no relevant-topic samples for {word!r}")
    per_topic = [
        WordVector(
            word,
            "T_" + strategy,
            aggregate_mentions(
                [_mention_vector(r, strategy) for r in _sample_vectors(s, store)]
            ),
            topic_id=s.topic_id,
        )
        for s in topic_samples
    ]
    if variant.startswith("T"):
        return per_topic
    averaged = aggregate_mentions([tv.values for tv in per_topic])
    return [WordVector(word, variant, averaged)]


# ---------------------------------------------------------------------------
# Variant matrices
# ---------------------------------------------------------------------------


@dataclass
class VariantMatrix:
    """Row-per-word vectors; 3-D for multi-vector variants.

    For T_* variants the second axis runs over all topics and rows for
    topics outside a word's relevant set are exactly zero.
    """

    variant: str
    words: list[str]
    matrix: np.ndarray  # (n, d) or (n, k, d)
    relevant_topics: dict[str, tuple[int, ...]] | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[-1]


def build_variant_matrix(
    variant: str,
    vectors_by_word: dict[str, list[WordVector]],
    n_topics: int | None = None,
) -> VariantMatrix:
    words = sorted(vectors_by_word)
    if not words:
        raise DataError("no word vectors to assemble")
    first = vectors_by_word[words[0]][0]
    dim = first.values.shape[0]

    if variant in SINGLE_VARIANTS:
        matrix = np.zeros((len(words), dim))
        for i, w in enumerate(words):
            (vec,) = vectors_by_word[w]
            matrix[i] = vec.values
        return VariantMatrix(variant, words, matrix)

    if variant == "C_all":
        n_layers = len(vectors_by_word[words[0]])
        matrix = np.zeros((len(words), n_layers, dim))
        for i, w in enumerate(words):
            for vec in vectors_by_word[w]:
                matrix[i, vec.layer_index] = vec.values
        return VariantMatrix(variant, words, matrix)

    if n_topics is None:
        raise ValueError("n_topics is required for T_* matrices")
    matrix = np.zeros((len(words), n_topics, dim))
    relevant: dict[str, tuple[int, ...]] = {}
    for i, w in enumerate(words):
        topics = []
        for vec in vectors_by_word[w]:
            matrix[i, vec.topic_id] = vec.values
            topics.append(vec.topic_id)
        relevant[w] = tuple(topics)
    return VariantMatrix(variant, words, matrix, relevant_topics=relevant)


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------


@dataclass
class PCAModel:
    mean: np.ndarray               # (d,)
    components: np.ndarray         # (target_dim, d), orthonormal rows
    explained_variance: np.ndarray  # (target_dim,), descending

    def project(self, rows: np.ndarray) -> np.ndarray:
        return (rows - self.mean) @ self.components.T


def pca_reduce(matrix: np.ndarray, target_dim: int) -> tuple[np.ndarray, PCAModel]:
    """Mean-centered projection onto the top principal components.

    Components come in descending eigenvalue order; each is sign-fixed so
    its largest-magnitude coordinate is positive. Projected rows are not
    re-normalized.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    n = matrix.shape[0]
    if n <= target_dim:
        raise ValueError(f"need more rows ({n}) than target dimensions ({target_dim})")
    mean = matrix.mean(axis=0)
    centered = matrix - mean
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:target_dim].copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    explained = (singular[:target_dim] ** 2) / (n - 1)
    model = PCAModel(mean=mean, components=components, explained_variance=explained)
    return centered @ components.T, model


def write_pca_model(model: PCAModel, path: str | Path) -> None:
    header = {
        "dim": int(model.mean.shape[0]),
        "target_dim": int(model.components.shape[0]),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(np.ascontiguousarray(model.mean, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.components, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.explained_variance, dtype="<f8").tobytes())


def read_pca_model(path: str | Path) -> PCAModel:
    blob = Path(path).read_bytes()
    nl = blob.find(b"\n")
    header = json.loads(blob[:nl].decode("utf-8"))
    d, t = header["dim"], header["target_dim"]
    body = blob[nl + 1:]
    if len(body) != (d + t * d + t) * 8:
        raise DataError(f"pca model file {path} has unexpected payload size")
    mean = np.frombuffer(body[: d * 8], dtype="<f8").copy()
    comps = np.frombuffer(body[d * 8: (d + t * d) * 8], dtype="<f8").reshape(t, d).copy()
    ev = np.frombuffer(body[(d + t * d) * 8:], dtype="<f8").copy()
    return PCAModel(mean=mean, components=comps, explained_variance=ev)


def pca_reduce_matrix(vm: VariantMatrix, target_dim: int) -> tuple[VariantMatrix, PCAModel]:
    """Fit on the real (non-placeholder) rows and project them; zero
    placeholder rows of T_* matrices stay exactly zero."""
    if vm.matrix.ndim == 2:
        reduced, model = pca_reduce(vm.matrix, target_dim)
        return VariantMatrix(vm.variant, vm.words, reduced, vm.relevant_topics), model

    flat = vm.matrix.reshape(-1, vm.dim)
    real = ~np.all(flat == 0.0, axis=1)
    _, model = pca_reduce(flat[real], target_dim)
    out = np.zeros((flat.shape[0], target_dim))
    out[real] = model.project(flat[real])
    reduced = out.reshape(vm.matrix.shape[0], vm.matrix.shape[1], target_dim)
    return VariantMatrix(vm.variant, vm.words, reduced, vm.relevant_topics), model


# ---------------------------------------------------------------------------
# Nearest neighbors
# ---------------------------------------------------------------------------


def nearest_neighbors(query: WordVector, matrix: VariantMatrix, k: int) -> list[tuple[str, float]]:
    """Top-k words by cosine similarity, excluding the query word itself.

    Ties break by ascending word order. For multi-vector matrices each
    word's best-scoring row represents it. Zero placeholder rows are not
    candidates.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not matrix.words:
        raise DataError("empty variant matrix")
    qnorm = float(np.linalg.norm(query.values))
    if qnorm < 1e-12:
        raise DataError("query vector is zero")

    best: dict[str, float] = {}
    rows = matrix.matrix if matrix.matrix.ndim == 3 else matrix.matrix[:, None, :]
    for word, group in zip(matrix.words, rows):
        if word == query.word:
            continue
        for vec in group:
            norm = float(np.linalg.norm(vec))
            if norm < 1e-12:
                continue
            cos = float(np.dot(query.values, vec) / (qnorm * norm))
            if word not in best or cos > best[word]:
                best[word] = cos
    ranked = sorted(best.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


# ---------------------------------------------------------------------------
# Persistence: CVS1 payload plus a JSON-lines sidecar index
# ---------------------------------------------------------------------------


def write_variant_vectors(
    vectors_by_word: dict[str, list[WordVector]],
    variant: str,
    store_path: str | Path,
    index_path: str | Path,
) -> None:
    ordered: list[WordVector] = []
    for word in sorted(vectors_by_word):
        ordered.extend(
            sorted(
                vectors_by_word[word],
                key=lambda v: (v.topic_id if v.topic_id is not None else -1,
                               v.layer_index if v.layer_index is not None else -1),
            )
        )
    records = [
        LayerVectors(rid, variant_mode(variant), vec.values[None, :].astype(np.float32))
        for rid, vec in enumerate(ordered)
    ]
    write_store(records, store_path)
    with open(index_path, "w", encoding="utf-8") as fh:
        for rid, vec in enumerate(ordered):
            fh.write(json.dumps({
                "word": vec.word,
                "variant": vec.variant,
                "topic_id": vec.topic_id,
                "layer_index": vec.layer_index,
                "record_id": rid,
            }) + "\n")


def read_variant_vectors(
    store_path: str | Path, index_path: str | Path
) -> tuple[str, dict[str, list[WordVector]]]:
    store = read_store(store_path)
    by_word: dict[str, list[WordVector]] = {}
    variant = None
    with open(index_path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            variant = rec["variant"]
            values = store.get(rec["record_id"])[0].astype(np.float64)
            by_word.setdefault(rec["word"], []).append(
                WordVector(rec["word"], variant, values,
                           topic_id=rec["topic_id"], layer_index=rec["layer_index"])
            )
    if variant is None:
        raise DataError(f"empty variant index {index_path}")
    return variant, by_word
