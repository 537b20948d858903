"""Run a pretrained transformer over a mention manifest into a CVS1 store.

Unmasked records carry one vector per layer, layer 0 being the average of
the model's static input-embedding rows for the target's word-pieces and
layers 1..L the per-layer hidden states averaged over those pieces. Masked
records replace the whole target word with a single mask token and keep
only the final layer's vector at that position.

Mentions whose target cannot be aligned to word-pieces unambiguously are
skipped and logged, never silently zeroed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .align import pieces_in_span, target_span
from .manifest import ManifestEntry, read_manifest
from .store import MODE_MASKED, MODE_UNMASKED, write_store

logger = logging.getLogger(__name__)


@dataclass
class ExtractionJob:
    manifest: str | Path
    model_name: str
    mode: str  # "masked" | "unmasked"
    out: str | Path
    batch_size: int = 16
    device: str = "cpu"


@dataclass
class ExtractStats:
    written: int = 0
    skipped: list[tuple[int, str]] = field(default_factory=list)

    def skip(self, mention_id: int, reason: str) -> None:
        logger.warning("skipping mention %d: %s", mention_id, reason)
        self.skipped.append((mention_id, reason))


def extract(job: ExtractionJob) -> ExtractStats:
    mode = job.mode.lower()
    if mode not in ("masked", "unmasked"):
        raise ValueError(f"mode must be 'masked' or 'unmasked', got {job.mode!r}")
    entries = read_manifest(job.manifest)
    expected = mode.upper()
    for e in entries:
        if e.mode != expected:
            raise ValueError(
                f"manifest entry {e.mention_id} has mode {e.mode}, job wants {expected}"
            )

    tokenizer = AutoTokenizer.from_pretrained(job.model_name)
    if tokenizer.mask_token is None and mode == "masked":
        raise ValueError(f"model {job.model_name} has no mask token")
    model = AutoModel.from_pretrained(job.model_name)
    model.eval()
    model.to(job.device)

    stats = ExtractStats()
    records: dict[int, np.ndarray] = {}
    todo: list[ManifestEntry] = []
    seen: set[int] = set()
    for e in entries:
        if e.mention_id in seen:
            stats.skip(e.mention_id, "duplicate mention_id, already encoded")
            continue
        seen.add(e.mention_id)
        if not 0 <= e.token_index < len(e.tokens):
            stats.skip(e.mention_id, "token_index out of range")
            continue
        todo.append(e)

    with torch.no_grad():
        for start in range(0, len(todo), job.batch_size):
            batch = todo[start: start + job.batch_size]
            _extract_batch(batch, tokenizer, model, mode, records, stats, job.device)

    if not records:
        raise ValueError("no mentions could be encoded; refusing to write an empty store")
    mode_byte = MODE_MASKED if mode == "masked" else MODE_UNMASKED
    stats.written = write_store(records, mode_byte, job.out)
    logger.info(
        "wrote %d records to %s (%d skipped)", stats.written, job.out, len(stats.skipped)
    )
    return stats


def _prepare_text(entry: ManifestEntry, tokenizer, mode: str) -> tuple[str, tuple[int, int]]:
    tokens = list(entry.tokens)
    if mode == "masked":
        tokens[entry.token_index] = tokenizer.mask_token
    return " ".join(tokens), target_span(tokens, entry.token_index)


def _extract_batch(batch, tokenizer, model, mode, records, stats, device) -> None:
    texts, spans = [], []
    for entry in batch:
        text, span = _prepare_text(entry, tokenizer, mode)
        texts.append(text)
        spans.append(span)

    enc = tokenizer(
        texts,
        return_tensors="pt",
        padding=True,
        truncation=True,
        return_offsets_mapping=True,
        return_special_tokens_mask=True,
    )
    offsets = enc.pop("offset_mapping")
    special = enc.pop("special_tokens_mask")
    enc = {k: v.to(device) for k, v in enc.items()}
    out = model(**enc, output_hidden_states=True)
    hidden = out.hidden_states  # (L+1) tensors of (batch, pieces, dim)
    embedding_table = model.get_input_embeddings().weight

    for i, entry in enumerate(batch):
        piece_ids = pieces_in_span(offsets[i].tolist(), special[i].tolist(), spans[i])
        if piece_ids is None:
            stats.skip(entry.mention_id, "target does not align to word-pieces")
            continue
        if mode == "masked":
            input_ids = enc["input_ids"][i]
            if (len(piece_ids) != 1
                    or int(input_ids[piece_ids[0]]) != tokenizer.mask_token_id):
                stats.skip(entry.mention_id, "mask token did not survive tokenization")
                continue
            vec = hidden[-1][i, piece_ids[0]]
            records[entry.mention_id] = vec.cpu().numpy()[None, :].astype(np.float32)
        else:
            input_ids = enc["input_ids"][i]
            rows = [embedding_table[input_ids[p]] for p in piece_ids]
            layers = [torch.stack(rows).mean(dim=0)]
            for level in range(1, len(hidden)):
                layers.append(hidden[level][i, piece_ids].mean(dim=0))
            stacked = torch.stack(layers).cpu().numpy().astype(np.float32)
            records[entry.mention_id] = stacked
