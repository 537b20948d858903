"""Per-property sigmoid probes over (combined) word vectors.

Two softmax combiners feed the probe: one with a scalar per input vector
(used to soft-select encoder layers), one with a scalar per global topic,
masked to each word's relevant-topic set and renormalized. Probe weights
and combiner scalars are trained jointly with AdamW on binary
cross-entropy; all gradients, including the path through the softmax and
the final vector normalization, are computed analytically.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .aggregate import VariantMatrix
from .errors import DataError, DegenerateAggregateError

logger = logging.getLogger(__name__)


@dataclass
class LayerCombiner:
    scalars: np.ndarray  # one per input vector


@dataclass
class TopicCombiner:
    scalars: np.ndarray  # one per global topic, shared across words


def _softmax(scalars: np.ndarray) -> np.ndarray:
    shifted = scalars - scalars.max()
    e = np.exp(shifted)
    return e / e.sum()


def _masked_softmax(scalars: np.ndarray, support: np.ndarray) -> np.ndarray:
    if not support.any():
        raise DataError("empty relevant-topic set")
    shifted = scalars - scalars[support].max()
    e = np.where(support, np.exp(shifted), 0.0)
    return e / e.sum()


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm < 1e-12:
        raise DegenerateAggregateError("weighted vector sum cancelled to zero")
    return vec / norm


def combine_layers(vectors: np.ndarray, combiner: LayerCombiner) -> np.ndarray:
    """Softmax-weighted average of the k input vectors, normalized."""
    vectors = np.asarray(vectors, dtype=np.float64)
    weights = _softmax(np.asarray(combiner.scalars, dtype=np.float64))
    return _normalize(weights @ vectors)


def combine_topics(
    topic_vectors: np.ndarray,
    topic_set: Sequence[int],
    combiner: TopicCombiner,
) -> np.ndarray:
    """Softmax over the word's relevant topics only, then weighted average.

    topic_vectors has one row per global topic; rows outside topic_set are
    placeholders and get exactly zero weight.
    """
    topic_vectors = np.asarray(topic_vectors, dtype=np.float64)
    support = np.zeros(topic_vectors.shape[0], dtype=bool)
    support[list(topic_set)] = True
    weights = _masked_softmax(np.asarray(combiner.scalars, dtype=np.float64), support)
    return _normalize(weights @ topic_vectors)


# ---------------------------------------------------------------------------
# Word representations, as consumed by a probe
# ---------------------------------------------------------------------------


@dataclass
class Representations:
    """Lookup from word to its probe input.

    kind "single": (d,) vectors used as-is. kind "layers": (k, d) stacks
    soft-selected by a LayerCombiner. kind "topics": (K, d) stacks with
    zero placeholder rows, soft-selected by a TopicCombiner over the word's
    relevant topics.
    """

    kind: str
    vectors: dict[str, np.ndarray]
    topic_sets: dict[str, tuple[int, ...]] | None = None

    @property
    def n_scalars(self) -> int:
        if self.kind == "single":
            return 0
        return next(iter(self.vectors.values())).shape[0]

    @property
    def dim(self) -> int:
        return next(iter(self.vectors.values())).shape[-1]

    @classmethod
    def from_variant_matrix(cls, vm: VariantMatrix) -> "Representations":
        vectors = {w: vm.matrix[i] for i, w in enumerate(vm.words)}
        if vm.matrix.ndim == 2:
            return cls("single", vectors)
        if vm.relevant_topics is not None:
            return cls("topics", vectors, topic_sets=dict(vm.relevant_topics))
        return cls("layers", vectors)


# ---------------------------------------------------------------------------
# Probe forward/backward
# ---------------------------------------------------------------------------


def _forward_input(reps: Representations, word: str, scalars: np.ndarray | None):
    """Return (x, cache) where x is the probe input for the word."""
    raw = reps.vectors[word]
    if reps.kind == "single":
        return raw, None
    if reps.kind == "layers":
        weights = _softmax(scalars)
    else:
        support = np.zeros(raw.shape[0], dtype=bool)
        support[list(reps.topic_sets[word])] = True
        weights = _masked_softmax(scalars, support)
    summed = weights @ raw
    norm = float(np.linalg.norm(summed))
    if norm < 1e-12:
        raise DegenerateAggregateError(f"combined vector for {word!r} cancelled to zero")
    return summed / norm, (raw, weights, norm)


def _backward_scalars(dx: np.ndarray, x: np.ndarray, cache) -> np.ndarray:
    raw, weights, norm = cache
    dsum = (dx - x * float(x @ dx)) / norm
    dweights = raw @ dsum
    return weights * (dweights - float(weights @ dweights))


def _stable_bce(z: float, y: float) -> float:
    return max(z, 0.0) - y * z + np.log1p(np.exp(-abs(z)))


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


def probe_loss_and_grads(
    weights: np.ndarray,
    bias: float,
    scalars: np.ndarray | None,
    reps: Representations,
    words: Sequence[str],
    labels: np.ndarray,
):
    """Mean binary cross-entropy and its gradients over a batch of words."""
    n = len(words)
    loss = 0.0
    gw = np.zeros_like(weights)
    gb = 0.0
    gs = np.zeros_like(scalars) if scalars is not None else None
    for word, y in zip(words, labels):
        x, cache = _forward_input(reps, word, scalars)
        z = float(weights @ x + bias)
        loss += _stable_bce(z, float(y))
        dz = _sigmoid(z) - float(y)
        gw += dz * x
        gb += dz
        if cache is not None:
            gs += _backward_scalars(dz * weights, x, cache)
    loss /= n
    gw /= n
    gb /= n
    if gs is not None:
        gs /= n
    return loss, gw, gb, gs


def probe_loss(weights, bias, scalars, reps, words, labels) -> float:
    loss, _, _, _ = probe_loss_and_grads(weights, bias, scalars, reps, words, labels)
    return loss


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    batch_size: int = 8
    learning_rate: float = 0.005
    epochs: int = 100
    patience: int = 10
    seed: int = 0
    weight_decay: float = 0.01
    threshold: float = 0.5


@dataclass
class PropertyProbe:
    property_name: str
    kind: str
    weights: np.ndarray
    bias: float
    scalars: np.ndarray | None
    config: TrainConfig
    dev_f1: float | None = None

    def scores(self, words: Sequence[str], reps: Representations) -> np.ndarray:
        out = np.empty(len(words))
        for i, w in enumerate(words):
            x, _ = _forward_input(reps, w, self.scalars)
            out[i] = _sigmoid(float(self.weights @ x + self.bias))
        return out

    def predict(self, words: Sequence[str], reps: Representations) -> np.ndarray:
        return self.scores(words, reps) >= self.config.threshold


def f1_score(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Positive-class F1; 0 by convention when precision + recall is 0."""
    y_true = np.asarray(y_true, dtype=bool)
    y_pred = np.asarray(y_pred, dtype=bool)
    tp = int(np.sum(y_true & y_pred))
    fp = int(np.sum(~y_true & y_pred))
    fn = int(np.sum(y_true & ~y_pred))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


class _AdamW:
    """Decoupled weight decay Adam, applied uniformly to all parameters."""

    def __init__(self, lr: float, weight_decay: float,
                 betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.wd = weight_decay
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name, g in grads.items():
            m = self._m.setdefault(name, np.zeros_like(g))
            v = self._v.setdefault(name, np.zeros_like(g))
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            m_hat = m / (1 - self.b1 ** self.t)
            v_hat = v / (1 - self.b2 ** self.t)
            params[name] -= self.lr * (m_hat / (np.sqrt(v_hat) + self.eps)
                                       + self.wd * params[name])


def train_probe(
    dataset: "PropertyDataset",
    property_name: str,
    reps: Representations,
    config: TrainConfig,
) -> PropertyProbe:
    """Fit one binary probe; deterministic given config.seed.

    Early-stops on dev F1 (patience epochs without improvement) and keeps
    the best dev snapshot when a dev split is available.
    """
    positives = dataset.positives[property_name]
    train_words = _with_vectors(dataset.train, reps, property_name)
    if not train_words:
        raise DataError(f"empty training split for property {property_name!r}")
    dev_words = _with_vectors(dataset.dev, reps, property_name, warn=False)

    train_labels = np.array([w in positives for w in train_words], dtype=np.float64)
    dev_labels = np.array([w in positives for w in dev_words], dtype=bool)

    params = {
        "weights": np.zeros(reps.dim),
        "bias": np.zeros(1),
    }
    if reps.kind != "single":
        params["scalars"] = np.zeros(reps.n_scalars)

    rng = np.random.default_rng(config.seed)
    opt = _AdamW(config.learning_rate, config.weight_decay)
    best: tuple[float, dict[str, np.ndarray]] | None = None
    stale = 0

    for _epoch in range(config.epochs):
        order = rng.permutation(len(train_words))
        for start in range(0, len(order), config.batch_size):
            batch = order[start: start + config.batch_size]
            words = [train_words[i] for i in batch]
            loss, gw, gb, gs = probe_loss_and_grads(
                params["weights"], float(params["bias"][0]),
                params.get("scalars"), reps, words, train_labels[batch],
            )
            grads = {"weights": gw, "bias": np.array([gb])}
            if gs is not None:
                grads["scalars"] = gs
            opt.step(params, grads)

        if dev_words:
            probe = _probe_from_params(property_name, reps, params, config)
            score = f1_score(dev_labels, probe.predict(dev_words, reps))
            if best is None or score > best[0]:
                best = (score, {k: v.copy() for k, v in params.items()})
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    break

    if best is not None:
        dev_f1, params = best
    else:
        dev_f1 = None
    probe = _probe_from_params(property_name, reps, params, config)
    probe.dev_f1 = dev_f1
    return probe


def _probe_from_params(name, reps, params, config) -> PropertyProbe:
    return PropertyProbe(
        property_name=name,
        kind=reps.kind,
        weights=params["weights"].copy(),
        bias=float(params["bias"][0]),
        scalars=params["scalars"].copy() if "scalars" in params else None,
        config=config,
    )


def _with_vectors(words, reps, property_name, warn=True) -> list[str]:
    kept = [w for w in words if w in reps.vectors]
    if warn and len(kept) < len(words):
        missing = len(words) - len(kept)
        logger.warning(
            "dropping %d word(s) without vectors for property %s", missing, property_name
        )
    return kept


# ---------------------------------------------------------------------------
# Dataset loading
# ---------------------------------------------------------------------------


@dataclass
class PropertyDataset:
    properties: list[str]
    positives: dict[str, set[str]]
    words: list[str]
    train: list[str] = field(default_factory=list)
    dev: list[str] = field(default_factory=list)
    test: list[str] = field(default_factory=list)


def load_property_dataset(
    path: str | Path,
    min_positives: int,
    split_spec: str | Path = "random",
    seed: int = 0,
) -> PropertyDataset:
    """Load a word<TAB>comma-separated-labels TSV.

    Properties with fewer than min_positives positive words are dropped.
    Splits are 60/20/20 random by word given the seed, unless split_spec
    names a JSON file with explicit train/dev/test word lists.
    """
    words: list[str] = []
    labels: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0]:
                raise DataError(f"{path}: malformed row at line {lineno}")
            word = parts[0]
            if word in labels:
                raise DataError(f"{path}: duplicate word {word!r} at line {lineno}")
            words.append(word)
            labels[word] = [p for p in parts[1].split(",") if p]

    counts: dict[str, int] = {}
    for props in labels.values():
        for p in props:
            counts[p] = counts.get(p, 0) + 1
    properties = sorted(p for p, n in counts.items() if n >= min_positives)
    if not properties:
        raise DataError("empty dataset after property filtering")
    keep = set(properties)
    positives = {p: set() for p in properties}
    for word, props in labels.items():
        for p in props:
            if p in keep:
                positives[p].add(word)

    dataset = PropertyDataset(properties=properties, positives=positives, words=words)

    if split_spec == "random":
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(words))
        n_train = int(0.6 * len(words))
        n_dev = int(0.2 * len(words))
        dataset.train = [words[i] for i in order[:n_train]]
        dataset.dev = [words[i] for i in order[n_train: n_train + n_dev]]
        dataset.test = [words[i] for i in order[n_train + n_dev:]]
    else:
        spec = json.loads(Path(split_spec).read_text(encoding="utf-8"))
        splits = [list(spec.get(k, [])) for k in ("train", "dev", "test")]
        flat = [w for part in splits for w in part]
        if len(set(flat)) != len(flat):
            raise DataError(f"split file {split_spec}: splits are not disjoint")
        unknown = sorted(set(flat) - set(words))
        if unknown:
            raise DataError(f"split file {split_spec}: unknown words {unknown[:5]}")
        dataset.train, dataset.dev, dataset.test = splits
    return dataset


# ---------------------------------------------------------------------------
# Hyperparameter search and evaluation
# ---------------------------------------------------------------------------


@dataclass
class Grid:
    batch_sizes: tuple[int, ...] = (4, 8, 16)
    learning_rates: tuple[float, ...] = (0.01, 0.005, 0.001, 0.0001)


def grid_search(
    dataset: PropertyDataset,
    reps: Representations,
    grid: Grid,
    base_config: TrainConfig,
) -> dict[str, tuple[PropertyProbe, float, int]]:
    """Pick each property's grid point by dev F1.

    Ties between grid points break toward the lower learning rate, then the
    smaller batch size. Returns property -> (probe, best_lr, best_batch).
    """
    if not dataset.dev:
        raise DataError("dev split is empty; cannot tune")
    selected = {}
    for prop in dataset.properties:
        candidates = []
        for batch in grid.batch_sizes:
            for lr in grid.learning_rates:
                cfg = replace(base_config, batch_size=batch, learning_rate=lr)
                probe = train_probe(dataset, prop, reps, cfg)
                candidates.append((probe.dev_f1 or 0.0, lr, batch, probe))
        candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
        _, best_lr, best_batch, best_probe = candidates[0]
        selected[prop] = (best_probe, best_lr, best_batch)
    return selected


def evaluate_probes(
    selected: dict[str, tuple[PropertyProbe, float, int]],
    dataset: PropertyDataset,
    reps: Representations,
    variant: str,
) -> tuple[dict, dict]:
    """Score the tuned probes on the test split.

    Returns (report, per-word test predictions); the report's macro F1 is
    the unweighted mean of the per-property F1 scores.
    """
    per_property: dict[str, dict] = {}
    predictions: dict[str, dict[str, int]] = {}
    for prop, (probe, best_lr, best_batch) in sorted(selected.items()):
        test_words = _with_vectors(dataset.test, reps, prop)
        gold = np.array([w in dataset.positives[prop] for w in test_words], dtype=bool)
        pred = probe.predict(test_words, reps)
        per_property[prop] = {
            "f1": f1_score(gold, pred),
            "best_lr": best_lr,
            "best_batch": best_batch,
        }
        predictions[prop] = {w: int(p) for w, p in zip(test_words, pred)}
    macro = float(np.mean([v["f1"] for v in per_property.values()]))
    report = {"variant": variant, "per_property": per_property, "macro_f1": macro}
    return report, predictions


def tune_and_evaluate(
    dataset: PropertyDataset,
    reps: Representations,
    grid: Grid,
    base_config: TrainConfig,
    variant: str,
) -> tuple[dict, dict]:
    """Grid-search every property, then report test F1 and the macro mean."""
    selected = grid_search(dataset, reps, grid, base_config)
    return evaluate_probes(selected, dataset, reps, variant)
