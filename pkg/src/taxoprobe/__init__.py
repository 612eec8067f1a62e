"""taxoprobe: label-free taxonomy evaluation via masked-language-model prompting."""

__version__ = "0.1.0"

from taxoprobe.backends import (
    CachedBackend,
    FillMaskBackend,
    FixtureBackend,
    HttpBackend,
    Prediction,
    PredictionList,
    fill_mask_rank,
)
from taxoprobe.masking import EntityInventory, MaskingExample
from taxoprobe.matching import MatchPolicy, default_policy, is_positive, matches, normalize
from taxoprobe.noise import NoiseSpec, degrade, sweep
from taxoprobe.prompts import PromptQuery, PromptTemplate, default_templates, query_pool, render
from taxoprobe.scoring import (
    EdgeVerdict,
    RelationAccuracy,
    VoteResult,
    majority_vote,
    rank_taxonomies,
    score_edge,
    score_taxonomy,
)
from taxoprobe.taxonomy import Concept, Taxonomy, parse_edge_list, parse_tree

__all__ = [
    "CachedBackend",
    "Concept",
    "EdgeVerdict",
    "EntityInventory",
    "FillMaskBackend",
    "FixtureBackend",
    "HttpBackend",
    "MaskingExample",
    "MatchPolicy",
    "NoiseSpec",
    "Prediction",
    "PredictionList",
    "PromptQuery",
    "PromptTemplate",
    "RelationAccuracy",
    "Taxonomy",
    "VoteResult",
    "default_policy",
    "default_templates",
    "degrade",
    "fill_mask_rank",
    "is_positive",
    "majority_vote",
    "matches",
    "normalize",
    "parse_edge_list",
    "parse_tree",
    "query_pool",
    "rank_taxonomies",
    "render",
    "score_edge",
    "score_taxonomy",
    "sweep",
]
