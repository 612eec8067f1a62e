"""Shared fixture data: transcribed prediction tables and builders.

The seafood tables hold reference top-5 predictions (with probabilities)
of a pre-trained whole-word-masking BERT for the "is a type of" prompt,
plus the full eleven-prompt rank table for the (seafood, shrimp) pair.
Deep ranks (e.g. seafood at 4407 for "shrimp is an [MASK]") are realized by
padding with synthetic filler tokens that cannot match any parent term.
"""

from __future__ import annotations

import json

import pytest

from taxoprobe.backends import FixtureBackend
from taxoprobe.prompts import PromptTemplate, default_templates, render
from taxoprobe.taxonomy import Taxonomy, parse_tree

# child -> top-5 (token, probability) under "{c} is a type of [MASK]"
SEAFOOD_TOP5 = {
    "mussel": [("fish", 0.227), ("dish", 0.144), ("seafood", 0.140), ("meat", 0.037), ("soup", 0.033)],
    "clam": [("fish", 0.203), ("dish", 0.095), ("seafood", 0.076), ("crab", 0.030), ("thing", 0.027)],
    "lobster": [("seafood", 0.222), ("dish", 0.145), ("lobster", 0.131), ("food", 0.052), ("sauce", 0.052)],
    "chicken": [("dish", 0.167), ("meat", 0.110), ("chicken", 0.079), ("thing", 0.058), ("sauce", 0.052)],
    "beef": [("meat", 0.274), ("beef", 0.161), ("dish", 0.063), ("food", 0.027), ("thing", 0.024)],
}

# rank of "seafood" in the full prediction list per child
SEAFOOD_DEEP_RANK = {"mussel": 3, "clam": 3, "lobster": 1, "chicken": 73, "beef": 57}

# template id -> (top-5 tokens, rank of "seafood") for the child "shrimp"
SHRIMP_TABLE = {
    "p1a": (["salad", "cocktail", "pasta", "soup", "rice"], 359),
    "p1b": (["fried", "no", "garlic", "coconut", "fresh"], 117),
    "p2a": (["joke", "must", "winner", "favorite", "hit"], 959),
    "p2b": (["option", "issue", "experience", "art", "order"], 4407),
    "p3a": (["joke", "thing", "dish", "treat", "disappointment"], 146),
    "p3b": (["dish", "thing", "food", "sauce", "seafood"], 5),
    "p3c": (["that", "this", "shrimp", "food", "seafood"], 5),
    "p4a": (["sides", "food", "seafood", "fish", "shrimp"], 3),
    "p4b": (["lot", "variety", "side", "combination", "protein"], 40),
    "p4c": (["ingredient", "item", "option", "order", "animal"], 197),
    "p5a": (["dish", "thing", "part", "item", "roll"], 16),
}

SHRIMP_EXPECTED_RANKS = [359, 117, 959, 4407, 146, 5, 5, 3, 40, 197, 16]

# model -> (top-4 tokens, rank of "steak") for "My favorite [MASK] is sirloin"
SIRLOIN_TABLE = {
    "m1a": (["burger", "dish", "sandwich", "steak"], 4),
    "m1b": (["dish", "burger", "beer", "sandwich"], 10),
    "m2a": (["steak", "dish", "meat", "cut"], 1),
    "m2b": (["steak", "dish", "burger", "meat"], 1),
    "m0a": (["dish", "burger", "steak", "meat"], 3),
    "m0b": (["cut", "steak", "meat", "beef"], 2),
    "bert-large-wwm": (["fruit", "flavor", "food", "color"], 69),
    "bert-base": (["food", "drink", "color", "dessert"], 71),
}

SEAFOOD_TREE = json.dumps(
    {
        "name": "seafood",
        "children": ["mussel", "clam", "lobster", "beef", "pork"],
    }
)

P3B = default_templates()[5]
assert P3B.template_id == "p3b"


def deep_list(top5, target=None, target_rank=None, min_length=0):
    """Extend a transcribed top list with filler tokens down to a target rank.

    Fillers are synthetic tokens (w00006, w00007, ...) with strictly
    decreasing probabilities; the target token, when not already present in
    the head, is inserted at exactly ``target_rank``.
    """
    items = list(top5)
    if items and not isinstance(items[0], tuple):
        items = [(tok, 0.2 / (i + 1)) for i, tok in enumerate(items)]
    if target_rank is not None and target_rank <= len(items):
        assert items[target_rank - 1][0] == target
        return items
    goal = max(min_length, target_rank or 0, len(items))
    prob = items[-1][1]
    while len(items) < goal:
        prob *= 0.999
        next_rank = len(items) + 1
        if target_rank is not None and next_rank == target_rank:
            items.append((target, prob))
        else:
            items.append((f"w{next_rank:05d}", prob))
    return items


def seafood_prompt(child: str) -> str:
    return render(P3B, child, "[MASK]").rendered


@pytest.fixture(scope="session")
def seafood_taxonomy() -> Taxonomy:
    return parse_tree(SEAFOOD_TREE, name="seafood-excerpt")


@pytest.fixture(scope="session")
def seafood_top5_backend() -> FixtureBackend:
    """Top-5 reference rows only, probabilities included."""
    table = {seafood_prompt(child): rows for child, rows in SEAFOOD_TOP5.items()}
    return FixtureBackend(table, model_id="bert-large-wwm")


@pytest.fixture(scope="session")
def seafood_deep_backend() -> FixtureBackend:
    """Top-5 reference rows padded so "seafood" sits at its recorded deep rank."""
    table = {
        seafood_prompt(child): deep_list(rows, "seafood", SEAFOOD_DEEP_RANK[child])
        for child, rows in SEAFOOD_TOP5.items()
    }
    return FixtureBackend(table, model_id="bert-large-wwm")


@pytest.fixture(scope="session")
def shrimp_backend() -> FixtureBackend:
    """All eleven prompts for "shrimp", padded to the recorded seafood ranks."""
    table = {}
    for template in default_templates():
        tokens, rank = SHRIMP_TABLE[template.template_id]
        prompt = render(template, "shrimp", "[MASK]").rendered
        table[prompt] = deep_list(tokens, "seafood", rank)
    return FixtureBackend(table, model_id="bert-large-wwm")


@pytest.fixture(scope="session")
def sirloin_backends() -> dict[str, FixtureBackend]:
    prompt = render(default_templates()[10], "sirloin", "[MASK]").rendered
    out = {}
    for model, (tokens, rank) in SIRLOIN_TABLE.items():
        out[model] = FixtureBackend(
            {prompt: deep_list(tokens, "steak", rank)}, model_id=model
        )
    return out


def oracle_backend(taxonomy: Taxonomy, template: PromptTemplate = P3B) -> FixtureBackend:
    """Backend that answers each original child's query with its true parent(s) on top."""
    table: dict[str, list[tuple[str, float]]] = {}
    for parent, child in taxonomy.edge_set():
        prompt = render(template, child, "[MASK]").rendered
        rows = table.setdefault(prompt, [])
        rows.append((parent, 0.9 / (len(rows) + 1)))
    return FixtureBackend(table, model_id="oracle")
