"""Deciding whether a predicted token counts as a hit for a parent term.

Matching is deliberately rule-based and dependency-free: lowercasing,
whitespace collapse, a suffix table for English plurals with an exception
map, and explicit equivalence classes for special cases (dessert/desert,
veggie(s)/vegetable(s)).  The exception map and equivalence classes ship as
a data file users can extend; nothing here consults a lemmatizer model, so
results are deterministic across environments.

Normalization is idempotent by construction: every rule output is either an
exception/representative value (which maps to itself) or no longer carries a
strippable suffix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Optional, Sequence

from taxoprobe.errors import InputError

_VOWEL_S_KEEP = ("ss", "us", "is")  # never strip a bare -s after these
_SIBILANT_ES = ("ches", "shes", "sses", "xes", "zes")


@dataclass(frozen=True)
class MatchPolicy:
    """Normalization and hit-counting rules for prediction/parent comparison."""

    case_fold: bool = True
    equivalence_map: Mapping[str, str] = field(default_factory=dict)
    plural_exceptions: Mapping[str, str] = field(default_factory=dict)
    stop_list: frozenset[str] = frozenset()
    edit_distance_one: bool = False

    @classmethod
    def from_dict(cls, data: dict, edit_distance_one: bool = False) -> "MatchPolicy":
        classes = [list(c) for c in data.get("equivalences", [])]
        seen: set[str] = set()
        eq: dict[str, str] = {}
        for cls_members in classes:
            if not cls_members:
                continue
            rep = cls_members[0].lower()
            for member in cls_members:
                member = member.lower()
                if member in seen:
                    raise InputError(f"equivalence classes overlap on {member!r}")
                seen.add(member)
                eq[member] = rep
        exceptions = {k.lower(): v.lower() for k, v in data.get("plural_exceptions", {}).items()}
        policy = cls(
            equivalence_map=eq,
            plural_exceptions=exceptions,
            edit_distance_one=edit_distance_one,
        )
        stop = frozenset(normalize(tok, policy) for tok in data.get("stop_list", []))
        if stop:
            policy = cls(
                equivalence_map=eq,
                plural_exceptions=exceptions,
                stop_list=stop,
                edit_distance_one=edit_distance_one,
            )
        return policy


def load_policy(path: str, edit_distance_one: bool = False) -> MatchPolicy:
    """Load a policy file: {"equivalences": [[...]], "plural_exceptions": {}, "stop_list": []}."""
    with open(path, encoding="utf-8") as fh:
        return MatchPolicy.from_dict(json.load(fh), edit_distance_one=edit_distance_one)


@lru_cache(maxsize=2)
def default_policy(edit_distance_one: bool = False) -> MatchPolicy:
    data = resources.files("taxoprobe.data").joinpath("match_policy.json").read_text("utf-8")
    return MatchPolicy.from_dict(json.loads(data), edit_distance_one=edit_distance_one)


def singularize_word(word: str, exceptions: Mapping[str, str] | None = None) -> str:
    """Singularize one lowercase word by the suffix rule table."""
    if exceptions and word in exceptions:
        return exceptions[word]
    if len(word) <= 3:
        return word
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith(_SIBILANT_ES):
        return word[:-2]
    if word.endswith("oes") and len(word) > 4:
        return word[:-2]
    if word.endswith("s") and not word.endswith(_VOWEL_S_KEEP):
        return word[:-1]
    return word


def singularize(term: str, policy: Optional[MatchPolicy] = None) -> str:
    """Singularize a (possibly multi-word) lowercase term on its final word."""
    policy = policy or default_policy()
    words = term.split(" ")
    words[-1] = singularize_word(words[-1], policy.plural_exceptions)
    return " ".join(words)


def normalize(term: str, policy: Optional[MatchPolicy] = None) -> str:
    """Canonical form: lowercase, collapse whitespace, singularize, map equivalences."""
    if not term:
        raise InputError("cannot normalize an empty term")
    policy = policy or default_policy()
    t = term.lower() if policy.case_fold else term
    t = " ".join(t.split())
    if t in policy.equivalence_map:
        return policy.equivalence_map[t]
    s = singularize(t, policy)
    if s in policy.equivalence_map:
        return policy.equivalence_map[s]
    return s


def _edit_distance_leq_one(a: str, b: str) -> bool:
    if a == b:
        return True
    la, lb = len(a), len(b)
    if abs(la - lb) > 1:
        return False
    if la == lb:
        return sum(x != y for x, y in zip(a, b)) == 1
    if la > lb:
        a, b, la, lb = b, a, lb, la
    # one insertion turns a into b
    i = j = edits = 0
    while i < la and j < lb:
        if a[i] == b[j]:
            i += 1
            j += 1
        else:
            edits += 1
            if edits > 1:
                return False
            j += 1
    return True


def matches(prediction_token: str, parent: str, policy: Optional[MatchPolicy] = None) -> bool:
    """True iff the prediction counts as a hit for the parent term.

    Requires exact equality of normalized forms (multi-word parents match only
    whole predicted tokens); distance-1 matching is available behind the
    policy flag for ablation.
    """
    policy = policy or default_policy()
    if not prediction_token or not parent:
        return False
    pred = normalize(prediction_token, policy)
    if pred in policy.stop_list:
        return False
    target = normalize(parent, policy)
    if pred == target:
        return True
    if policy.edit_distance_one:
        return _edit_distance_leq_one(pred, target)
    return False


def rank_of(parent: str, predictions, policy: Optional[MatchPolicy] = None) -> Optional[int]:
    """1-based rank of the first prediction matching the parent, or None."""
    items = getattr(predictions, "items", predictions)
    for idx, pred in enumerate(items, start=1):
        if matches(pred.token, parent, policy):
            return idx
    return None


def is_positive(
    parent: str,
    pools: Iterable,
    k: int,
    policy: Optional[MatchPolicy] = None,
) -> bool:
    """True iff the parent is recalled within the top k of any prediction pool."""
    if k < 1:
        raise InputError(f"recall threshold k must be >= 1, got {k}")
    for pool in pools:
        rank = rank_of(parent, pool, policy)
        if rank is not None and rank <= k:
            return True
    return False
