"""Character-offset alignment from whitespace tokens to word-pieces.

The manifest's sentences are whitespace token lists; the model sees the
tokens joined by single spaces. A target token therefore owns a known
character span, and its word-pieces are the ones whose offsets fall inside
that span. Anything that does not line up cleanly (no pieces, or a piece
crossing the span boundary) counts as ambiguous and the caller skips the
mention rather than guessing.
"""

from __future__ import annotations


def target_span(tokens: list[str], token_index: int) -> tuple[int, int]:
    start = sum(len(t) + 1 for t in tokens[:token_index])
    return start, start + len(tokens[token_index])


def pieces_in_span(
    offsets,
    special_mask,
    span: tuple[int, int],
) -> list[int] | None:
    """Indices of word-pieces covering exactly the span, or None if ambiguous."""
    span_start, span_end = span
    picked = []
    for i, ((start, end), special) in enumerate(zip(offsets, special_mask)):
        if special or start == end:
            continue
        if end <= span_start or start >= span_end:
            continue
        if start < span_start or end > span_end:
            return None  # piece crosses the token boundary
        picked.append(i)
    return picked or None
