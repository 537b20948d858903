"""Mention manifest reader: one JSON object per line.

Each line carries {mention_id, word, tokens, token_index, mode, topic_id}.
The same mention may appear on several lines (once per topic sample); the
extractor encodes it once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass
class ManifestEntry:
    mention_id: int
    word: str
    tokens: list[str]
    token_index: int
    mode: str  # "MASKED" | "UNMASKED"


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                entries.append(
                    ManifestEntry(
                        mention_id=int(rec["mention_id"]),
                        word=rec["word"],
                        tokens=list(rec["tokens"]),
                        token_index=int(rec["token_index"]),
                        mode=rec["mode"],
                    )
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise ValueError(f"{path} line {lineno}: malformed manifest entry: {exc}")
    return entries
