"""Evaluation report files: canonical JSON with per-edge evidence.

Reports carry the score, every edge verdict (best prompt and rank, for
auditability) and an echo of the effective configuration including content
hashes of the template set and match policy.  Serialization is canonical
(sorted keys, fixed indentation) so identical runs produce byte-identical
files regardless of worker count.
"""

from __future__ import annotations

import hashlib
import json
from typing import Optional, Sequence

from taxoprobe.errors import InputError
from taxoprobe.matching import MatchPolicy
from taxoprobe.prompts import PromptTemplate
from taxoprobe.scoring import EdgeVerdict, RelationAccuracy, TaxonomyResult, VoteResult

FORMAT_VERSION = 1


def templates_hash(templates: Sequence[PromptTemplate]) -> str:
    blob = "\n".join(f"{t.template_id}\t{t.pattern}" for t in templates)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def policy_hash(policy: MatchPolicy) -> str:
    blob = json.dumps(
        {
            "case_fold": policy.case_fold,
            "equivalence_map": dict(sorted(policy.equivalence_map.items())),
            "plural_exceptions": dict(sorted(policy.plural_exceptions.items())),
            "stop_list": sorted(policy.stop_list),
            "edit_distance_one": policy.edit_distance_one,
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _verdict_payload(verdict: EdgeVerdict) -> dict:
    return {
        "parent": verdict.parent,
        "child": verdict.child,
        "positive": verdict.positive,
        "best_rank": (
            {"template_id": verdict.best_rank[0], "rank": verdict.best_rank[1]}
            if verdict.best_rank
            else None
        ),
        "per_prompt_rank": verdict.per_prompt_rank,
        "error": verdict.error,
    }


def report_payload(result: TaxonomyResult, config: dict) -> dict:
    score = result.score
    return {
        "format_version": FORMAT_VERSION,
        "taxonomy": score.taxonomy_name,
        "model_id": score.model_id,
        "n_edges": score.n_edges,
        "n_positive": score.n_positive,
        "score": score.score,
        "config": config,
        "edges": [_verdict_payload(v) for v in result.verdicts],
    }


def dumps_report(result: TaxonomyResult, config: dict) -> str:
    return json.dumps(report_payload(result, config), sort_keys=True, indent=2) + "\n"


def write_report(path: str, result: TaxonomyResult, config: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_report(result, config))


def load_report(path: str) -> TaxonomyResult:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        verdicts = [
            EdgeVerdict(
                parent=row["parent"],
                child=row["child"],
                model_id=data["model_id"],
                per_prompt_rank=row.get("per_prompt_rank", {}),
                positive=bool(row["positive"]),
                best_rank=(
                    (row["best_rank"]["template_id"], int(row["best_rank"]["rank"]))
                    if row.get("best_rank")
                    else None
                ),
                error=row.get("error"),
            )
            for row in data["edges"]
        ]
        score = RelationAccuracy(
            taxonomy_name=data["taxonomy"],
            model_id=data["model_id"],
            n_edges=int(data["n_edges"]),
            n_positive=int(data["n_positive"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: not a valid report file: {exc}") from exc
    return TaxonomyResult(score, verdicts)


def vote_payload(
    score: RelationAccuracy,
    votes: Sequence[VoteResult],
    sources: Sequence[str],
    threshold: int,
) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "taxonomy": score.taxonomy_name,
        "model_id": score.model_id,
        "n_edges": score.n_edges,
        "n_positive": score.n_positive,
        "score": score.score,
        "threshold": threshold,
        "models": list(sources),
        "edges": [
            {
                "parent": v.parent,
                "child": v.child,
                "votes_for": v.votes_for,
                "total_models": v.total_models,
                "positive": v.positive,
            }
            for v in votes
        ],
    }


def write_vote_report(
    path: str,
    payloads: list[dict],
    ranking: Optional[list[RelationAccuracy]] = None,
) -> None:
    document: dict = {"format_version": FORMAT_VERSION, "taxonomies": payloads}
    if ranking is not None:
        document["ranking"] = [
            {"taxonomy": s.taxonomy_name, "score": s.score, "position": i + 1}
            for i, s in enumerate(ranking)
        ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(document, sort_keys=True, indent=2) + "\n")
