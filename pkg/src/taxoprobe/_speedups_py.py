"""Pure-Python kernels for corpus tokenization and phrase tagging.

Reference implementation of the hot per-line primitives.  taxoprobe.kernels
prefers the compiled Cython twin (taxoprobe._speedups) when it is built;
both must stay behaviourally identical (tests/test_kernels.py enforces
parity).

Token definition: maximal runs of Unicode alphanumerics/underscore, with an
apostrophe kept inside a word when flanked by alphanumerics; any other
non-space character is a single-character token.
"""

from __future__ import annotations

_APOSTROPHES = ("'", "’")


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def tokenize_spans(text: str) -> list[tuple[int, int]]:
    """Half-open (start, end) character spans of the tokens in ``text``."""
    spans: list[tuple[int, int]] = []
    n = len(text)
    i = 0
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if _is_word_char(ch):
            start = i
            i += 1
            while i < n:
                ch = text[i]
                if _is_word_char(ch):
                    i += 1
                elif (
                    ch in _APOSTROPHES
                    and i + 1 < n
                    and text[i - 1].isalnum()
                    and text[i + 1].isalnum()
                ):
                    i += 1
                else:
                    break
            spans.append((start, i))
        else:
            spans.append((i, i + 1))
            i += 1
    return spans


def find_phrase_spans(
    tokens: list[str],
    table: dict[str, list[tuple[tuple[str, ...], int]]],
) -> list[tuple[int, int, int]]:
    """Longest-match, non-overlapping phrase spans, left to right.

    ``table`` maps a phrase's first token to its candidate (token-tuple,
    class-rank) entries, longest first.  Returns (token_start, token_end,
    class_rank) triples with half-open token ranges.
    """
    spans: list[tuple[int, int, int]] = []
    n = len(tokens)
    i = 0
    while i < n:
        entries = table.get(tokens[i])
        if entries is None:
            i += 1
            continue
        matched = False
        for phrase, rank in entries:
            length = len(phrase)
            if i + length > n:
                continue
            if all(tokens[i + j] == phrase[j] for j in range(length)):
                spans.append((i, i + length, rank))
                i += length
                matched = True
                break
        if not matched:
            i += 1
    return spans
