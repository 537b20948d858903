"""Shared bits for extractor tests: tiny vocabulary and manifest writer."""

import json

WORDS = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "a", "cat", "dog", "bird", "fish", "tree", "rock", "sat", "on",
    "mat", "ran", "swam", "flew", "green", "blue", "red", "big", "small",
    "fast", "slow", "run", "jump", "swim", "##ning", "##ing", "near", "water",
    "sky", "grass", "old", "new",
]

MAX_PIECES = 24


def write_manifest(path, rows, mode):
    with open(path, "w", encoding="utf-8") as fh:
        for mention_id, tokens, token_index in rows:
            fh.write(json.dumps({
                "mention_id": mention_id,
                "word": tokens[token_index] if 0 <= token_index < len(tokens) else "?",
                "tokens": tokens,
                "token_index": token_index,
                "mode": mode,
                "topic_id": "RANDOM",
            }) + "\n")
    return path
