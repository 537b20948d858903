"""Stage orchestration: config handling, artifact provenance, stage runners.

Every stage writes into a directory named by a hash over exactly the
configuration keys, external file contents, and upstream artifact hashes it
depends on. Re-running with unchanged inputs lands in the same directory
and reproduces byte-identical outputs; changing anything relevant lands in
a fresh directory, so artifacts from different configurations never
overwrite each other. A manifest.json in each directory records the
provenance and is written last, marking the stage complete.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import shutil
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import aggregate as agg
from . import corpus as corpus_mod
from . import encoding as enc
from . import probe as probe_mod
from . import topics as topics_mod
from .errors import ConfigError, DataError, MissingArtifactError

logger = logging.getLogger(__name__)

STAGES = (
    "ingest", "lda", "topics", "select", "manifest", "encode",
    "aggregate", "pca", "train", "eval", "neighbors",
)

ARTIFACT_NAME = {
    "ingest": "corpus store",
    "lda": "topic model",
    "topics": "relevant topics",
    "select": "mention samples",
    "manifest": "mention manifest",
    "encode": "vector store",
    "aggregate": "variant vectors",
    "pca": "reduced vectors",
    "train": "trained probes",
    "eval": "evaluation report",
    "neighbors": "neighbor dumps",
}


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _parse_opt_float(text: str):
    return None if text.strip() == "" else float(text)


def _parse_opt_str(text: str):
    return None if text.strip() == "" else text.strip()


@dataclass
class PipelineConfig:
    corpus: str
    out_dir: str
    min_count: int = 100
    n_topics: int = 25
    alpha: float = 0.0001
    beta: float | None = None  # defaults to 1/n_topics inside the sampler
    lda_iterations: int = 1000
    lda_drop_top: int = 100
    lda_min_freq: int = 5
    threshold: float = 0.6
    max_topics: int = 6
    n_random: int = 500
    n_per_topic: int = 100
    encoder: str = "reference"
    encoder_dim: int = 32
    encoder_layers: int = 4
    variant: str = "T_mask"
    seed: int = 13
    dataset: str | None = None
    min_positives: int = 10
    split: str = "random"
    grid_batch_sizes: tuple[int, ...] = (4, 8, 16)
    grid_learning_rates: tuple[float, ...] = (0.01, 0.005, 0.001, 0.0001)
    epochs: int = 100
    patience: int = 10
    use_pca: bool = False
    pca_dim: int = 300
    neighbors_k: int = 5
    target_words: str | None = None

    # per-stage seeds derive from the base seed with fixed offsets
    @property
    def seed_lda(self) -> int:
        return self.seed

    @property
    def seed_sample(self) -> int:
        return self.seed + 1

    @property
    def seed_encoder(self) -> int:
        return self.seed + 2

    @property
    def seed_split(self) -> int:
        return self.seed + 3

    @property
    def seed_train(self) -> int:
        return self.seed + 4


_PARSERS = {
    "corpus": str, "out_dir": str, "encoder": str, "variant": str, "split": str,
    "min_count": int, "n_topics": int, "lda_iterations": int, "lda_drop_top": int,
    "lda_min_freq": int, "max_topics": int, "n_random": int, "n_per_topic": int,
    "encoder_dim": int, "encoder_layers": int, "seed": int, "min_positives": int,
    "epochs": int, "patience": int, "pca_dim": int, "neighbors_k": int,
    "alpha": float, "threshold": float,
    "beta": _parse_opt_float,
    "dataset": _parse_opt_str, "target_words": _parse_opt_str,
    "grid_batch_sizes": _parse_int_list, "grid_learning_rates": _parse_float_list,
    "use_pca": _parse_bool,
}


def load_config(path: str | Path, overrides: list[str] | None = None) -> PipelineConfig:
    """Parse a key=value config file; --set overrides win over the file."""
    raw: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigError(f"{path} line {lineno}: expected key=value")
        raw[key.strip()] = value.strip()
    for item in overrides or []:
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        raw[key.strip()] = value.strip()

    values = {}
    for key, text_value in raw.items():
        parser = _PARSERS.get(key)
        if parser is None:
            raise ConfigError(f"unknown config key: {key!r}")
        try:
            values[key] = parser(text_value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    for required in ("corpus", "out_dir"):
        if required not in values:
            raise ConfigError(f"missing required config key: {required!r}")

    config = PipelineConfig(**values)
    _validate_config(config)
    return config


def _validate_config(config: PipelineConfig) -> None:
    if config.variant not in agg.VARIANTS:
        raise ConfigError(f"unknown variant {config.variant!r}")
    if not Path(config.corpus).is_file():
        raise ConfigError(f"corpus file not found: {config.corpus}")
    for key in ("dataset", "target_words"):
        value = getattr(config, key)
        if value is not None and not Path(value).is_file():
            raise ConfigError(f"{key} file not found: {value}")
    if config.split != "random" and not Path(config.split).is_file():
        raise ConfigError(f"split file not found: {config.split}")
    if config.encoder != "reference" and not Path(config.encoder).is_dir():
        raise ConfigError("encoder must be 'reference' or an existing store directory")


# ---------------------------------------------------------------------------
# Artifact directories and provenance hashing
# ---------------------------------------------------------------------------

_STAGE_KEYS = {
    "ingest": ("min_count",),
    "lda": ("n_topics", "alpha", "beta", "lda_iterations", "lda_drop_top",
            "lda_min_freq", "seed"),
    "topics": ("threshold", "max_topics"),
    "select": ("n_random", "n_per_topic", "seed"),
    "manifest": (),
    "encode": ("encoder", "encoder_dim", "encoder_layers", "seed"),
    "aggregate": ("variant",),
    "pca": ("pca_dim",),
    "train": ("min_positives", "split", "seed", "grid_batch_sizes",
              "grid_learning_rates", "epochs", "patience", "use_pca"),
    "eval": (),
    "neighbors": ("neighbors_k",),
}

_STAGE_FILES = {
    "ingest": ("corpus",),
    "select": ("target_words",),
    "pca": ("dataset",),
    "train": ("dataset",),
    "eval": ("dataset",),
}


def stage_deps(stage: str, config: PipelineConfig) -> tuple[str, ...]:
    reps_source = "pca" if config.use_pca else "aggregate"
    deps = {
        "ingest": (),
        "lda": ("ingest",),
        "topics": ("ingest", "lda"),
        "select": ("ingest", "lda", "topics"),
        "manifest": ("ingest", "select"),
        "encode": ("manifest",),
        "aggregate": ("select", "encode"),
        "pca": ("aggregate",),
        "train": (reps_source,),
        "eval": ("train", reps_source),
        "neighbors": ("aggregate",),
    }
    return deps[stage]


def _file_sha(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _stage_hash(stage: str, config: PipelineConfig, cache: dict[str, str]) -> str:
    if stage in cache:
        return cache[stage]
    payload = {
        "stage": stage,
        "keys": {k: getattr(config, k) for k in _STAGE_KEYS[stage]},
        "files": {},
        "deps": {},
    }
    for key in _STAGE_FILES.get(stage, ()):
        value = getattr(config, key)
        if value is not None:
            payload["files"][key] = _file_sha(value)
    if stage == "train" and config.split != "random":
        payload["files"]["split"] = _file_sha(config.split)
    if stage == "encode" and config.encoder != "reference":
        for name in ("masked.cvs", "unmasked.cvs"):
            src = Path(config.encoder) / name
            if src.is_file():
                payload["files"][name] = _file_sha(src)
    for dep in stage_deps(stage, config):
        payload["deps"][dep] = _stage_hash(dep, config, cache)
    digest = hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode("utf-8")
    ).hexdigest()[:12]
    cache[stage] = digest
    return digest


def artifact_dir(stage: str, config: PipelineConfig) -> Path:
    return Path(config.out_dir) / f"{stage}-{_stage_hash(stage, config, {})}"


@contextmanager
def _atomic(path: Path):
    tmp = path.with_name(path.name + ".tmp")
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def _write_json(path: Path, payload) -> None:
    with _atomic(path) as tmp:
        tmp.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                       encoding="utf-8")


def run_stage(stage: str, config: PipelineConfig) -> Path:
    """Run one pipeline stage; returns the artifact directory.

    Upstream artifacts are looked up by their provenance hash and must be
    complete (manifest.json present) before the stage starts.
    """
    if stage not in STAGES:
        raise ConfigError(f"unknown stage {stage!r}; expected one of {', '.join(STAGES)}")
    deps = stage_deps(stage, config)
    dep_dirs = {}
    for dep in deps:
        ddir = artifact_dir(dep, config)
        if not (ddir / "manifest.json").is_file():
            raise MissingArtifactError(
                f"requires artifact: {ARTIFACT_NAME[dep]} (run stage '{dep}' first)"
            )
        dep_dirs[dep] = ddir

    sdir = artifact_dir(stage, config)
    sdir.mkdir(parents=True, exist_ok=True)
    logger.info("stage %s -> %s", stage, sdir)
    _STAGE_FNS[stage](config, sdir, dep_dirs)

    cache: dict[str, str] = {}
    manifest = {
        "stage": stage,
        "config": {k: getattr(config, k) for k in _STAGE_KEYS[stage]},
        "config_hash": _stage_hash(stage, config, cache),
        "inputs": {dep: cache[dep] for dep in deps},
        "outputs": sorted(
            p.name for p in sdir.iterdir() if p.name != "manifest.json"
        ),
    }
    _write_json(sdir / "manifest.json", manifest)
    return sdir


# ---------------------------------------------------------------------------
# Stage implementations
# ---------------------------------------------------------------------------


def _stage_ingest(config: PipelineConfig, sdir: Path, deps) -> None:
    store = corpus_mod.ingest_corpus(config.corpus)
    vocab = corpus_mod.build_vocabulary(store, config.min_count)
    index = corpus_mod.build_mention_index(store, vocab)
    with _atomic(sdir / "corpus.jsonl") as tmp:
        corpus_mod.write_corpus_store(store, tmp)
    with _atomic(sdir / "vocab.json") as tmp:
        corpus_mod.write_vocabulary(vocab, tmp)
    with _atomic(sdir / "index.jsonl") as tmp:
        corpus_mod.write_mention_index(index, tmp)


def _stage_lda(config: PipelineConfig, sdir: Path, deps) -> None:
    store = corpus_mod.read_corpus_store(deps["ingest"] / "corpus.jsonl")
    model = topics_mod.fit_lda(
        store, config.n_topics, config.alpha, beta=config.beta,
        iterations=config.lda_iterations, seed=config.seed_lda,
        drop_top=config.lda_drop_top, min_freq=config.lda_min_freq,
    )
    with _atomic(sdir / "model.bin") as tmp:
        topics_mod.write_topic_model(model, tmp)
    _write_json(sdir / "topic_summaries.json", topics_mod.topic_summaries(model))


def _target_words(config: PipelineConfig, index: corpus_mod.MentionIndex) -> list[str]:
    if config.target_words is None:
        return sorted(index.postings)
    listed = Path(config.target_words).read_text(encoding="utf-8").split()
    kept = [w for w in sorted(set(listed)) if w in index]
    missing = len(set(listed)) - len(kept)
    if missing:
        logger.warning("%d target word(s) are not in the mention index", missing)
    return kept


def _stage_topics(config: PipelineConfig, sdir: Path, deps) -> None:
    model = topics_mod.read_topic_model(deps["lda"] / "model.bin")
    index = corpus_mod.read_mention_index(deps["ingest"] / "index.jsonl")
    with _atomic(sdir / "topics.jsonl") as tmp, open(tmp, "w", encoding="utf-8") as fh:
        for word in _target_words(config, index):
            importance = topics_mod.word_topic_importance(model, index, word)
            relevant = topics_mod.select_relevant_topics(
                importance, config.threshold, config.max_topics
            )
            fh.write(json.dumps({
                "word": word,
                "weights": [float(x) for x in importance.weights],
                "topics": relevant.topic_ids,
                "cumulative": relevant.cumulative,
            }) + "\n")


def _word_seed(base: int, word: str) -> int:
    digest = hashlib.blake2b(f"{base}:{word}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _read_topic_table(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]


def _stage_select(config: PipelineConfig, sdir: Path, deps) -> None:
    model = topics_mod.read_topic_model(deps["lda"] / "model.bin")
    index = corpus_mod.read_mention_index(deps["ingest"] / "index.jsonl")
    table = _read_topic_table(deps["topics"] / "topics.jsonl")
    with _atomic(sdir / "samples.jsonl") as tmp, open(tmp, "w", encoding="utf-8") as fh:
        for entry in table:
            word = entry["word"]
            samples = [topics_mod.select_random_mentions(
                index, word, config.n_random, seed=_word_seed(config.seed_sample, word)
            )]
            samples += [
                topics_mod.select_topic_mentions(index, model, word, t, config.n_per_topic)
                for t in entry["topics"]
            ]
            for s in samples:
                fh.write(json.dumps({
                    "word": s.word,
                    "topic_id": "RANDOM" if s.topic_id is None else s.topic_id,
                    "n_requested": s.n_requested,
                    "mentions": [
                        [m.mention_id, m.doc_id, m.sent_id, m.token_index]
                        for m in s.mentions
                    ],
                }) + "\n")


def _read_samples(path: Path) -> list[topics_mod.MentionSample]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            topic = rec["topic_id"]
            samples.append(topics_mod.MentionSample(
                word=rec["word"],
                topic_id=None if topic == "RANDOM" else int(topic),
                mentions=[
                    corpus_mod.Mention(mid, rec["word"], doc, sent, tok)
                    for mid, doc, sent, tok in rec["mentions"]
                ],
                n_requested=rec["n_requested"],
            ))
    return samples


def _stage_manifest(config: PipelineConfig, sdir: Path, deps) -> None:
    store = corpus_mod.read_corpus_store(deps["ingest"] / "corpus.jsonl")
    samples = _read_samples(deps["select"] / "samples.jsonl")
    for mode in (enc.Mode.MASKED, enc.Mode.UNMASKED):
        with _atomic(sdir / f"{mode.name.lower()}.jsonl") as tmp:
            enc.emit_manifest(samples, store, mode, tmp)


def _stage_encode(config: PipelineConfig, sdir: Path, deps) -> None:
    written = 0
    for mode in (enc.Mode.MASKED, enc.Mode.UNMASKED):
        name = f"{mode.name.lower()}"
        entries = enc.read_manifest(deps["manifest"] / f"{name}.jsonl")
        if config.encoder == "reference":
            encoder = enc.ReferenceEncoder(
                config.seed_encoder, n_layers=config.encoder_layers, dim=config.encoder_dim
            )
            records = enc.encode_manifest(entries, encoder, mode)
            with _atomic(sdir / f"{name}.cvs") as tmp:
                enc.write_store(records, tmp)
            written += 1
        else:
            src = Path(config.encoder) / f"{name}.cvs"
            if not src.is_file():
                logger.warning("external encoder provides no %s store", name)
                continue
            store = enc.read_store(src)
            if store.mode is not mode:
                raise DataError(f"{src}: store mode {store.mode.name}, expected {mode.name}")
            missing = {e.mention_id for e in entries} - set(store.records)
            if missing:
                raise DataError(
                    f"{src}: store is missing {len(missing)} manifest mention(s), "
                    f"e.g. {sorted(missing)[:5]}"
                )
            with _atomic(sdir / f"{name}.cvs") as tmp:
                shutil.copyfile(src, tmp)
            written += 1
    if not written:
        raise DataError(
            f"external encoder directory {config.encoder} provides no "
            "masked.cvs or unmasked.cvs"
        )


def _stage_aggregate(config: PipelineConfig, sdir: Path, deps) -> None:
    samples = _read_samples(deps["select"] / "samples.jsonl")
    mode = agg.variant_mode(config.variant)
    store_path = deps["encode"] / f"{mode.name.lower()}.cvs"
    if not store_path.is_file():
        raise DataError(f"variant {config.variant} needs the {mode.name} store, "
                        f"which the encode stage did not produce")
    store = enc.read_store(store_path)

    by_word: dict[str, list[topics_mod.MentionSample]] = {}
    for s in samples:
        by_word.setdefault(s.word, []).append(s)
    vectors_by_word = {
        word: agg.build_variant(word, config.variant, word_samples, store)
        for word, word_samples in sorted(by_word.items())
    }
    with _atomic(sdir / "vectors.cvs") as tmp_store:
        with _atomic(sdir / "vectors.index.jsonl") as tmp_index:
            agg.write_variant_vectors(vectors_by_word, config.variant, tmp_store, tmp_index)
    _write_json(sdir / "meta.json", {
        "variant": config.variant,
        "n_topics": config.n_topics,
        "dim": int(next(iter(vectors_by_word.values()))[0].values.shape[0]),
    })


def _dataset_words(path: str) -> set[str]:
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                words.add(line.split("\t", 1)[0])
    return words


def _load_matrix(config: PipelineConfig, source_dir: Path) -> agg.VariantMatrix:
    meta = json.loads((source_dir / "meta.json").read_text(encoding="utf-8"))
    prefix = "reduced" if meta.get("reduced") else "vectors"
    variant, by_word = agg.read_variant_vectors(
        source_dir / f"{prefix}.cvs", source_dir / f"{prefix}.index.jsonl"
    )
    return agg.build_variant_matrix(variant, by_word, n_topics=meta["n_topics"])


def _stage_pca(config: PipelineConfig, sdir: Path, deps) -> None:
    if config.dataset is None:
        raise ConfigError("pca stage needs dataset= in the config")
    vm = _load_matrix(config, deps["aggregate"])
    keep = _dataset_words(config.dataset)
    indices = [i for i, w in enumerate(vm.words) if w in keep]
    if not indices:
        raise DataError("no dataset words have vectors; nothing to reduce")
    sub = agg.VariantMatrix(
        vm.variant,
        [vm.words[i] for i in indices],
        vm.matrix[indices],
        relevant_topics=vm.relevant_topics,
    )
    reduced, model = agg.pca_reduce_matrix(sub, config.pca_dim)

    by_word: dict[str, list[agg.WordVector]] = {}
    for i, word in enumerate(reduced.words):
        if reduced.matrix.ndim == 2:
            by_word[word] = [agg.WordVector(word, reduced.variant, reduced.matrix[i])]
        elif reduced.relevant_topics is not None:
            by_word[word] = [
                agg.WordVector(word, reduced.variant, reduced.matrix[i, t], topic_id=t)
                for t in reduced.relevant_topics[word]
            ]
        else:
            by_word[word] = [
                agg.WordVector(word, reduced.variant, reduced.matrix[i, level],
                               layer_index=level)
                for level in range(reduced.matrix.shape[1])
            ]
    with _atomic(sdir / "reduced.cvs") as tmp_store:
        with _atomic(sdir / "reduced.index.jsonl") as tmp_index:
            agg.write_variant_vectors(by_word, reduced.variant, tmp_store, tmp_index)
    with _atomic(sdir / "projection.bin") as tmp:
        agg.write_pca_model(model, tmp)
    _write_json(sdir / "meta.json", {
        "variant": reduced.variant,
        "n_topics": config.n_topics,
        "dim": config.pca_dim,
        "reduced": True,
    })


def _load_dataset(config: PipelineConfig) -> probe_mod.PropertyDataset:
    if config.dataset is None:
        raise ConfigError("this stage needs dataset= in the config")
    return probe_mod.load_property_dataset(
        config.dataset, config.min_positives,
        split_spec=config.split, seed=config.seed_split,
    )


def _stage_train(config: PipelineConfig, sdir: Path, deps) -> None:
    source = deps["pca"] if config.use_pca else deps["aggregate"]
    vm = _load_matrix(config, source)
    reps = probe_mod.Representations.from_variant_matrix(vm)
    dataset = _load_dataset(config)
    grid = probe_mod.Grid(config.grid_batch_sizes, config.grid_learning_rates)
    base = probe_mod.TrainConfig(
        epochs=config.epochs, patience=config.patience, seed=config.seed_train
    )
    selected = probe_mod.grid_search(dataset, reps, grid, base)
    payload = {
        prop: {
            "kind": probe.kind,
            "weights": [float(x) for x in probe.weights],
            "bias": probe.bias,
            "scalars": None if probe.scalars is None else [float(x) for x in probe.scalars],
            "dev_f1": probe.dev_f1,
            "best_lr": lr,
            "best_batch": batch,
            "threshold": probe.config.threshold,
        }
        for prop, (probe, lr, batch) in selected.items()
    }
    _write_json(sdir / "probes.json", payload)


def _stage_eval(config: PipelineConfig, sdir: Path, deps) -> None:
    source = deps["pca"] if config.use_pca else deps["aggregate"]
    vm = _load_matrix(config, source)
    reps = probe_mod.Representations.from_variant_matrix(vm)
    dataset = _load_dataset(config)
    payload = json.loads((deps["train"] / "probes.json").read_text(encoding="utf-8"))
    selected = {}
    for prop, rec in payload.items():
        probe = probe_mod.PropertyProbe(
            property_name=prop,
            kind=rec["kind"],
            weights=np.asarray(rec["weights"], dtype=np.float64),
            bias=rec["bias"],
            scalars=None if rec["scalars"] is None else np.asarray(rec["scalars"]),
            config=probe_mod.TrainConfig(threshold=rec["threshold"]),
            dev_f1=rec["dev_f1"],
        )
        selected[prop] = (probe, rec["best_lr"], rec["best_batch"])
    report, predictions = probe_mod.evaluate_probes(selected, dataset, reps, vm.variant)
    _write_json(sdir / "report.json", report)
    _write_json(sdir / "predictions.json", predictions)


def _stage_neighbors(config: PipelineConfig, sdir: Path, deps) -> None:
    vm = _load_matrix(config, deps["aggregate"])
    queries: list[tuple[str, int | None, np.ndarray]] = []
    if vm.matrix.ndim == 2:
        for i, word in enumerate(vm.words):
            queries.append((word, None, vm.matrix[i]))
    else:
        for i, word in enumerate(vm.words):
            for k in range(vm.matrix.shape[1]):
                if np.any(vm.matrix[i, k] != 0.0):
                    queries.append((word, k, vm.matrix[i, k]))

    with _atomic(sdir / "neighbors.tsv") as tmp, open(tmp, "w", encoding="utf-8") as fh:
        fh.write("word\ttopic\trank\tneighbor\tcosine\n")
        for word, topic, values in queries:
            query = agg.WordVector(word, vm.variant, values, topic_id=topic)
            for rank, (neighbor, cosine) in enumerate(
                agg.nearest_neighbors(query, vm, config.neighbors_k), start=1
            ):
                topic_label = "-" if topic is None else str(topic)
                fh.write(f"{word}\t{topic_label}\t{rank}\t{neighbor}\t{cosine:.6f}\n")

    flat = np.stack([values for _, _, values in queries])
    coords, _ = agg.pca_reduce(flat, 2)
    with _atomic(sdir / "coords.tsv") as tmp, open(tmp, "w", encoding="utf-8") as fh:
        fh.write("word\ttopic\tx\ty\n")
        for (word, topic, _), (x, y) in zip(queries, coords):
            topic_label = "-" if topic is None else str(topic)
            fh.write(f"{word}\t{topic_label}\t{x:.6f}\t{y:.6f}\n")


_STAGE_FNS = {
    "ingest": _stage_ingest,
    "lda": _stage_lda,
    "topics": _stage_topics,
    "select": _stage_select,
    "manifest": _stage_manifest,
    "encode": _stage_encode,
    "aggregate": _stage_aggregate,
    "pca": _stage_pca,
    "train": _stage_train,
    "eval": _stage_eval,
    "neighbors": _stage_neighbors,
}
