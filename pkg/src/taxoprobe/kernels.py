"""Kernel selection: compiled extension when built, pure Python otherwise.

``COMPILED`` tells callers (and the benchmark) which implementation is live.
"""

try:
    from taxoprobe import _speedups as _impl

    COMPILED = True
except ImportError:  # extension not built; the fallback is semantically identical
    from taxoprobe import _speedups_py as _impl

    COMPILED = False

tokenize_spans = _impl.tokenize_spans
find_phrase_spans = _impl.find_phrase_spans
