"""Relation-accuracy scoring, multi-model majority voting, taxonomy ranking.

An edge is positive iff its parent term is recalled within the top-k
predictions of any cloze query for its child.  The taxonomy score is the
positive fraction over the unique parent-child pairs (exactly 0 for a
zero-edge, single-level taxonomy).  Edges are scored concurrently; results
are assembled in edge order so worker count never changes the output.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from taxoprobe.backends import FillMaskBackend
from taxoprobe.errors import EdgeScoringError, InputError
from taxoprobe.matching import MatchPolicy, rank_of
from taxoprobe.prompts import PromptTemplate, query_pool
from taxoprobe.taxonomy import Taxonomy


@dataclass
class EdgeVerdict:
    """Per-edge, per-model evidence: rank per prompt and the positive decision."""

    parent: str
    child: str
    model_id: str
    per_prompt_rank: dict[str, Optional[int]]
    positive: bool
    best_rank: Optional[tuple[str, int]]  # (template_id, rank), min over prompts
    error: Optional[str] = None


@dataclass(frozen=True)
class RelationAccuracy:
    """Positive-edge fraction for one taxonomy under one model (or vote)."""

    taxonomy_name: str
    model_id: str
    n_edges: int
    n_positive: int

    @property
    def score(self) -> float:
        return self.n_positive / self.n_edges if self.n_edges else 0.0

    @property
    def exact(self) -> Fraction:
        return Fraction(self.n_positive, self.n_edges) if self.n_edges else Fraction(0)


@dataclass(frozen=True)
class VoteResult:
    parent: str
    child: str
    votes_for: int
    total_models: int
    positive: bool


@dataclass
class TaxonomyResult:
    score: RelationAccuracy
    verdicts: list[EdgeVerdict] = field(default_factory=list)


def score_edge(
    parent: str,
    child: str,
    backend: FillMaskBackend,
    templates: Sequence[PromptTemplate] | None = None,
    k: int = 10,
    policy: Optional[MatchPolicy] = None,
    trailing_period: bool = False,
) -> EdgeVerdict:
    """Issue the full query pool for the child and decide edge positivity.

    Fetches exactly k raw predictions per prompt (no deduplication): a parent
    recalled anywhere within them counts.
    """
    if k < 1:
        raise InputError(f"recall threshold k must be >= 1, got {k}")
    pool = query_pool(child, templates, backend.mask_token, trailing_period)
    per_prompt: dict[str, Optional[int]] = {}
    best: Optional[tuple[str, int]] = None
    try:
        for query in pool:
            predictions = backend.fill_mask(query, top_k=k)
            rank = rank_of(parent, predictions, policy)
            per_prompt[query.template_id] = rank
            if rank is not None and (best is None or rank < best[1]):
                best = (query.template_id, rank)
    except Exception as exc:
        raise EdgeScoringError(parent, child, exc) from exc
    return EdgeVerdict(
        parent=parent,
        child=child,
        model_id=backend.model_id,
        per_prompt_rank=per_prompt,
        positive=best is not None,
        best_rank=best,
    )


def score_taxonomy(
    taxonomy: Taxonomy,
    backend: FillMaskBackend,
    templates: Sequence[PromptTemplate] | None = None,
    k: int = 10,
    policy: Optional[MatchPolicy] = None,
    parallelism: int = 1,
    keep_going: bool = False,
    trailing_period: bool = False,
) -> TaxonomyResult:
    """Score every unique parent-child pair; verdicts come back in edge order.

    With ``keep_going``, edges whose backend calls fail count as negative and
    carry the error, keeping the denominator at the full unique-pair count.
    """
    if parallelism < 1:
        raise InputError(f"parallelism must be >= 1, got {parallelism}")
    edges = taxonomy.edge_set()

    def one(edge: tuple[str, str]) -> EdgeVerdict:
        parent, child = edge
        try:
            return score_edge(parent, child, backend, templates, k, policy, trailing_period)
        except EdgeScoringError as exc:
            if not keep_going:
                raise
            return EdgeVerdict(
                parent=parent,
                child=child,
                model_id=backend.model_id,
                per_prompt_rank={},
                positive=False,
                best_rank=None,
                error=str(exc.cause),
            )

    if parallelism == 1 or len(edges) <= 1:
        verdicts = [one(edge) for edge in edges]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            verdicts = list(pool.map(one, edges))

    n_positive = sum(v.positive for v in verdicts)
    score = RelationAccuracy(taxonomy.name, backend.model_id, len(edges), n_positive)
    return TaxonomyResult(score, verdicts)


def default_vote_threshold(total_models: int) -> int:
    return math.ceil(total_models / 2)


def majority_vote(
    verdicts_by_model: Mapping[str, Sequence[EdgeVerdict]],
    vote_threshold: Optional[int] = None,
    taxonomy_name: Optional[str] = None,
) -> tuple[RelationAccuracy, list[VoteResult]]:
    """Vote each edge across models: positive iff at least ``vote_threshold`` agree.

    All models must cover the same edge set.  The default threshold is a
    strict majority, e.g. 3 of 6.
    """
    if not verdicts_by_model:
        raise InputError("majority_vote needs at least one model's verdicts")
    total = len(verdicts_by_model)
    threshold = default_vote_threshold(total) if vote_threshold is None else vote_threshold
    if not 1 <= threshold <= total:
        raise InputError(f"vote threshold {threshold} invalid for {total} models")

    model_ids = list(verdicts_by_model)
    reference = verdicts_by_model[model_ids[0]]
    ref_edges = [(v.parent, v.child) for v in reference]
    by_model: dict[str, dict[tuple[str, str], EdgeVerdict]] = {}
    for model_id, verdicts in verdicts_by_model.items():
        table = {(v.parent, v.child): v for v in verdicts}
        if len(table) != len(verdicts):
            raise InputError(f"model {model_id!r} has duplicate edges")
        if set(table) != set(ref_edges):
            raise InputError(f"model {model_id!r} covers a different edge set")
        by_model[model_id] = table

    votes: list[VoteResult] = []
    for edge in ref_edges:
        votes_for = sum(by_model[m][edge].positive for m in model_ids)
        votes.append(VoteResult(edge[0], edge[1], votes_for, total, votes_for >= threshold))

    name = taxonomy_name or "taxonomy"
    score = RelationAccuracy(
        name,
        f"vote-{threshold}of{total}",
        len(ref_edges),
        sum(v.positive for v in votes),
    )
    return score, votes


def rank_taxonomies(scores: Sequence[RelationAccuracy]) -> list[RelationAccuracy]:
    """Descending by score; ties broken by taxonomy name for determinism."""
    return sorted(scores, key=lambda s: (-s.exact, s.taxonomy_name))
