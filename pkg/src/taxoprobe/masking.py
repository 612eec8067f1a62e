"""Fine-tuning corpus preparation with prioritized entity masking.

Builds masked-LM training examples from raw review text.  Mask targets are
chosen by priority: main taxonomy topics and parent terms first, then other
taxonomy terms (e.g. leaf nodes), then externally mined phrase-list terms,
and only then random tokens, until the mask budget is filled.  Three
policies are provided:

- ``entity15``: mask up to ceil(15% of tokens), consuming entity spans in
  priority order and topping up with random tokens;
- ``entity_one``: mask every occurrence of exactly one taxonomy entity
  (random among the highest priority class present), keeping the rest of the
  sentence as context;
- ``token15``: mask ceil(15% of tokens) uniformly at random, entity-blind.

Examples record character offsets into the original line, so a trainer can
re-tokenize with its own tokenizer.  Replacing the mask spans with their
recorded surfaces reconstructs the original line byte-for-byte.

The module also emits the extended-vocabulary token list: parent-term lemmas
missing from a base tokenizer vocabulary.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional

from taxoprobe.errors import InputError
from taxoprobe.kernels import find_phrase_spans, tokenize_spans
from taxoprobe.matching import MatchPolicy, singularize

logger = logging.getLogger(__name__)

CLASS_MAIN = "main"
CLASS_OTHER = "other"
CLASS_AUTOPHRASE = "autophrase"
CLASS_RANDOM = "random"
_ENTITY_CLASSES = (CLASS_MAIN, CLASS_OTHER, CLASS_AUTOPHRASE)

MASKING_POLICIES = ("entity15", "entity_one", "token15")

DEFAULT_MASK_TOKEN = "[MASK]"
DEFAULT_BUDGET = 0.15


def _clean_term(term: str) -> str:
    return " ".join(term.split()).lower()


@dataclass(frozen=True)
class EntityInventory:
    """Mask-priority term sets. A term's class is the highest set containing it."""

    main_topics: frozenset[str] = frozenset()
    other_terms: frozenset[str] = frozenset()
    autophrase_terms: frozenset[str] = frozenset()

    @classmethod
    def from_terms(
        cls,
        main_topics: Iterable[str] = (),
        other_terms: Iterable[str] = (),
        autophrase_terms: Iterable[str] = (),
    ) -> "EntityInventory":
        return cls(
            frozenset(_clean_term(t) for t in main_topics if t.strip()),
            frozenset(_clean_term(t) for t in other_terms if t.strip()),
            frozenset(_clean_term(t) for t in autophrase_terms if t.strip()),
        )


def load_term_file(path: str) -> frozenset[str]:
    """One term per line; blank lines and # comments skipped."""
    terms = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                terms.append(_clean_term(line))
    return frozenset(terms)


@lru_cache(maxsize=16)
def _phrase_table(inventory: EntityInventory):
    """first-token -> [(token tuple, class rank)], longest phrases first."""
    assigned: dict[tuple[str, ...], int] = {}
    for rank, terms in enumerate(
        (inventory.main_topics, inventory.other_terms, inventory.autophrase_terms)
    ):
        for term in terms:
            tokens = tuple(term[s:e] for s, e in tokenize_spans(term))
            if tokens and tokens not in assigned:
                assigned[tokens] = rank
    table: dict[str, list[tuple[tuple[str, ...], int]]] = {}
    for tokens, rank in assigned.items():
        table.setdefault(tokens[0], []).append((tokens, rank))
    for entries in table.values():
        entries.sort(key=lambda e: (-len(e[0]), e[0]))
    return table


@dataclass(frozen=True)
class EntitySpan:
    """A tagged entity occurrence: char and token extents plus priority class."""

    start: int
    end: int
    token_start: int
    token_end: int
    surface: str
    cls: str


def tag_entities(sentence: str, inventory: EntityInventory) -> list[EntitySpan]:
    """Longest-match, non-overlapping entity spans, left to right."""
    token_spans = tokenize_spans(sentence)
    lowered = [sentence[s:e].lower() for s, e in token_spans]
    spans = []
    for tok_start, tok_end, rank in find_phrase_spans(lowered, _phrase_table(inventory)):
        start = token_spans[tok_start][0]
        end = token_spans[tok_end - 1][1]
        spans.append(
            EntitySpan(
                start=start,
                end=end,
                token_start=tok_start,
                token_end=tok_end,
                surface=sentence[start:end],
                cls=_ENTITY_CLASSES[rank],
            )
        )
    return spans


@dataclass(frozen=True)
class MaskSpan:
    """One masked token: char offsets into the original line."""

    start: int
    end: int
    surface: str
    cls: str


@dataclass(frozen=True)
class MaskingExample:
    original: str
    masks: tuple[MaskSpan, ...]
    mask_token: str = DEFAULT_MASK_TOKEN

    def __post_init__(self):
        if not self.masks:
            raise InputError("a masking example needs at least one mask")

    @property
    def masked(self) -> str:
        """The line with every mask span replaced by the mask token."""
        parts = []
        cursor = 0
        for span in self.masks:
            parts.append(self.original[cursor : span.start])
            parts.append(self.mask_token)
            cursor = span.end
        parts.append(self.original[cursor:])
        return "".join(parts)

    def to_json(self) -> str:
        return json.dumps(
            {
                "text": self.original,
                "masks": [
                    {"start": m.start, "end": m.end, "surface": m.surface, "class": m.cls}
                    for m in self.masks
                ],
            },
            sort_keys=True,
            ensure_ascii=False,
        )


def reconstruct(masked: str, masks: tuple[MaskSpan, ...], mask_token: str = DEFAULT_MASK_TOKEN) -> str:
    """Invert masking: substitute each mask token with its recorded surface."""
    pieces = masked.split(mask_token)
    if len(pieces) != len(masks) + 1:
        raise InputError(
            f"masked text has {len(pieces) - 1} mask tokens but {len(masks)} labels"
        )
    out = [pieces[0]]
    for span, piece in zip(masks, pieces[1:]):
        out.append(span.surface)
        out.append(piece)
    return "".join(out)


def _token_masks(
    sentence: str,
    token_spans: list[tuple[int, int]],
    chosen: dict[int, str],
) -> tuple[MaskSpan, ...]:
    return tuple(
        MaskSpan(token_spans[i][0], token_spans[i][1], sentence[token_spans[i][0] : token_spans[i][1]], cls)
        for i, cls in sorted(chosen.items())
    )


def mask_entity_15(
    sentence: str,
    inventory: EntityInventory,
    rng: random.Random,
    budget: float = DEFAULT_BUDGET,
    mask_token: str = DEFAULT_MASK_TOKEN,
) -> Optional[MaskingExample]:
    """Budgeted entity-priority masking.

    Masks up to ceil(budget * token_count) tokens: entity spans in priority
    order (multi-token spans token by token), then random tokens until the
    budget is filled.  Returns None for lines that yield no tokens.
    """
    token_spans = tokenize_spans(sentence)
    if not token_spans:
        return None
    limit = math.ceil(budget * len(token_spans))
    chosen: dict[int, str] = {}
    spans = tag_entities(sentence, inventory)
    for cls in _ENTITY_CLASSES:
        for span in spans:
            if span.cls != cls:
                continue
            for idx in range(span.token_start, span.token_end):
                if len(chosen) >= limit:
                    break
                chosen.setdefault(idx, cls)
    if len(chosen) < limit:
        remaining = [i for i in range(len(token_spans)) if i not in chosen]
        for idx in rng.sample(remaining, limit - len(chosen)):
            chosen[idx] = CLASS_RANDOM
    return MaskingExample(sentence, _token_masks(sentence, token_spans, chosen), mask_token)


def mask_entity_one(
    sentence: str,
    inventory: EntityInventory,
    rng: random.Random,
    all_occurrences: bool = True,
    mask_token: str = DEFAULT_MASK_TOKEN,
) -> Optional[MaskingExample]:
    """Mask one taxonomy entity (chosen randomly in the highest class present).

    Every occurrence of the chosen surface is masked by default, preserving
    maximum sentence context around a single target.  Returns None when the
    line contains no taxonomy entity.
    """
    token_spans = tokenize_spans(sentence)
    if not token_spans:
        return None
    spans = tag_entities(sentence, inventory)
    for cls in (CLASS_MAIN, CLASS_OTHER):
        candidates = sorted({s.surface.lower() for s in spans if s.cls == cls})
        if not candidates:
            continue
        surface = rng.choice(candidates)
        occurrences = [s for s in spans if s.cls == cls and s.surface.lower() == surface]
        if not all_occurrences:
            occurrences = [occurrences[rng.randrange(len(occurrences))]]
        chosen: dict[int, str] = {}
        for span in occurrences:
            for idx in range(span.token_start, span.token_end):
                chosen[idx] = cls
        return MaskingExample(sentence, _token_masks(sentence, token_spans, chosen), mask_token)
    return None


def mask_token_15(
    sentence: str,
    rng: random.Random,
    budget: float = DEFAULT_BUDGET,
    mask_token: str = DEFAULT_MASK_TOKEN,
) -> Optional[MaskingExample]:
    """Entity-blind baseline: mask ceil(budget * token_count) random tokens."""
    token_spans = tokenize_spans(sentence)
    if not token_spans:
        return None
    limit = math.ceil(budget * len(token_spans))
    chosen = {i: CLASS_RANDOM for i in rng.sample(range(len(token_spans)), limit)}
    return MaskingExample(sentence, _token_masks(sentence, token_spans, chosen), mask_token)


@dataclass
class MaskingStats:
    lines_total: int = 0
    lines_sampled: int = 0
    examples_written: int = 0
    lines_skipped: int = 0  # empty, untokenizable, or no entity under entity_one
    class_counts: Counter = field(default_factory=Counter)


def _keep_line(seed: int, line_no: int, line: str, fraction: float) -> bool:
    digest = hashlib.sha1(f"{seed}:{line_no}:{line}".encode("utf-8")).digest()
    draw = int.from_bytes(digest[:8], "big") / 2**64
    return draw < fraction


def build_dataset(
    corpus_path: str,
    inventory: EntityInventory,
    masking_policy: str,
    out_path: str,
    fraction: float = 1.0,
    seed: int = 0,
    budget: float = DEFAULT_BUDGET,
    all_occurrences: bool = True,
    mask_token: str = DEFAULT_MASK_TOKEN,
) -> MaskingStats:
    """Stream the corpus (one review per line), sample, mask, write JSON lines.

    Line selection uses a seeded per-line hash, so a given (corpus, seed,
    fraction) always selects the same lines.  Output order equals input
    order.
    """
    if masking_policy not in MASKING_POLICIES:
        raise InputError(f"unknown masking policy {masking_policy!r}; use one of {MASKING_POLICIES}")
    if not 0.0 < fraction <= 1.0:
        raise InputError(f"fraction must be in (0, 1], got {fraction}")
    stats = MaskingStats()
    with open(corpus_path, encoding="utf-8") as corpus, open(
        out_path, "w", encoding="utf-8"
    ) as out:
        for line_no, raw in enumerate(corpus, start=1):
            line = raw.rstrip("\n")
            stats.lines_total += 1
            if not line.strip():
                stats.lines_skipped += 1
                continue
            if fraction < 1.0 and not _keep_line(seed, line_no, line, fraction):
                continue
            stats.lines_sampled += 1
            rng = random.Random(f"{seed}:{line_no}")
            if masking_policy == "entity15":
                example = mask_entity_15(line, inventory, rng, budget, mask_token)
            elif masking_policy == "entity_one":
                example = mask_entity_one(line, inventory, rng, all_occurrences, mask_token)
            else:
                example = mask_token_15(line, rng, budget, mask_token)
            if example is None:
                stats.lines_skipped += 1
                continue
            out.write(example.to_json() + "\n")
            stats.examples_written += 1
            stats.class_counts.update(m.cls for m in example.masks)
    if stats.examples_written == 0:
        logger.warning(
            "no masking examples produced from %s under policy %s", corpus_path, masking_policy
        )
    return stats


def missing_vocab(
    parents: Iterable[str],
    base_vocab: Iterable[str] | str,
    policy: Optional[MatchPolicy] = None,
) -> list[str]:
    """Parent-term lemmas absent from a base tokenizer vocabulary, sorted.

    ``base_vocab`` is a token-per-line file path or an iterable of tokens.
    Lemmas are singular forms under the match policy's rules, so a plural
    parent whose singular is already in the vocabulary adds nothing.
    """
    if isinstance(base_vocab, str):
        with open(base_vocab, encoding="utf-8") as fh:
            vocab = {line.strip() for line in fh if line.strip()}
    else:
        vocab = {tok.strip() for tok in base_vocab}
    lemmas = {singularize(_clean_term(p), policy) for p in parents if p.strip()}
    return sorted(lemma for lemma in lemmas if lemma and lemma not in vocab)
