#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Generates a synthetic review corpus, then times per-line tokenization and
entity tagging through both implementations, e.g.::

    python benchmarks/bench_kernels.py --lines 20000
"""

import argparse
import random
import time

from taxoprobe import _speedups_py as pure
from taxoprobe import kernels

try:
    from taxoprobe import _speedups as compiled
except ImportError:
    compiled = None

WORDS = (
    "everything was pretty good but the beef in mongolian sauce very chewy and "
    "had a weird texture great service tiny portions would come back again "
    "seafood salad dessert appetizer sushi pizza coffee bread pasta beer soup "
    "wine cheese cocktail taco water ! . , don't can't 5-star"
).split()

PHRASES = [
    ("beef", 0), ("seafood", 0), ("dessert", 0), ("mongolian beef", 1),
    ("weird texture", 2), ("tiny portions", 2), ("great service", 2), ("chewy", 2),
]


def build_corpus(n_lines: int, seed: int) -> list[str]:
    rng = random.Random(seed)
    return [
        " ".join(rng.choice(WORDS) for _ in range(rng.randint(8, 40)))
        for _ in range(n_lines)
    ]


def build_table():
    table = {}
    for phrase, rank in PHRASES:
        tokens = tuple(phrase.split())
        table.setdefault(tokens[0], []).append((tokens, rank))
    for entries in table.values():
        entries.sort(key=lambda e: (-len(e[0]), e[0]))
    return table


def run(impl, corpus, table) -> tuple[float, int]:
    start = time.perf_counter()
    n_spans = 0
    for line in corpus:
        spans = impl.tokenize_spans(line)
        tokens = [line[s:e] for s, e in spans]
        n_spans += len(impl.find_phrase_spans(tokens, table))
    return time.perf_counter() - start, n_spans


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lines", type=int, default=20000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    corpus = build_corpus(args.lines, args.seed)
    table = build_table()
    print(f"corpus: {args.lines} lines, selected kernels: "
          f"{'compiled' if kernels.COMPILED else 'pure-python'}")

    results = {}
    for name, impl in (("pure-python", pure), ("compiled", compiled)):
        if impl is None:
            print(f"{name:<12} not built (pip install -e . --no-build-isolation)")
            continue
        best = None
        for _ in range(args.repeats):
            elapsed, n_spans = run(impl, corpus, table)
            best = elapsed if best is None else min(best, elapsed)
        rate = args.lines / best
        results[name] = best
        print(f"{name:<12} {best:.3f}s  ({rate:,.0f} lines/s, {n_spans} entity spans)")

    if len(results) == 2:
        print(f"speedup      {results['pure-python'] / results['compiled']:.2f}x")


if __name__ == "__main__":
    main()
