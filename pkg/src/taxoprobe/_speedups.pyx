# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled kernels for corpus tokenization and phrase tagging.

Behaviourally identical to taxoprobe._speedups_py (the pure-Python
reference); tests/test_kernels.py enforces parity.  Keep both in sync.
"""

cpdef list tokenize_spans(str text):
    """Half-open (start, end) character spans of the tokens in ``text``."""
    cdef list spans = []
    cdef Py_ssize_t n = len(text)
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t start
    cdef Py_UCS4 ch
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isalnum() or ch == u'_':
            start = i
            i += 1
            while i < n:
                ch = text[i]
                if ch.isalnum() or ch == u'_':
                    i += 1
                elif (
                    (ch == u"'" or ch == u'’')
                    and i + 1 < n
                    and (<Py_UCS4> text[i - 1]).isalnum()
                    and (<Py_UCS4> text[i + 1]).isalnum()
                ):
                    i += 1
                else:
                    break
            spans.append((start, i))
        else:
            spans.append((i, i + 1))
            i += 1
    return spans


cpdef list find_phrase_spans(list tokens, dict table):
    """Longest-match, non-overlapping phrase spans, left to right.

    ``table`` maps a phrase's first token to its candidate (token-tuple,
    class-rank) entries, longest first.  Returns (token_start, token_end,
    class_rank) triples with half-open token ranges.
    """
    cdef list spans = []
    cdef Py_ssize_t n = len(tokens)
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t j, length
    cdef bint matched, equal
    cdef object entries
    cdef tuple phrase
    while i < n:
        entries = table.get(tokens[i])
        if entries is None:
            i += 1
            continue
        matched = False
        for phrase, rank in <list> entries:
            length = len(phrase)
            if i + length > n:
                continue
            equal = True
            for j in range(length):
                if <str> tokens[i + j] != <str> phrase[j]:
                    equal = False
                    break
            if equal:
                spans.append((i, i + length, rank))
                i += length
                matched = True
                break
        if not matched:
            i += 1
    return spans
