"""Noise degradation: replace a fraction of concepts, re-score, emit the curve.

Replacement rewrites node surfaces in place (node ids and edges are kept),
so node and edge counts are preserved.  Degraded taxonomies are re-validated:
surface collisions (duplicate edges, self-loops, cycles) are reported via a
warning, never silently collapsed, keeping the score denominator stable.
"""

from __future__ import annotations

import csv
import logging
import math
import random
import statistics
from dataclasses import dataclass
from typing import Optional, Sequence

from taxoprobe.backends import FillMaskBackend
from taxoprobe.errors import InputError
from taxoprobe.matching import MatchPolicy
from taxoprobe.prompts import PromptTemplate
from taxoprobe.scoring import score_taxonomy
from taxoprobe.taxonomy import Taxonomy

logger = logging.getLogger(__name__)

REPLACE_CHILD_ONLY = "child_only"
REPLACE_ANY_NODE = "any_node"


@dataclass(frozen=True)
class NoiseSpec:
    """Degradation plan: noise levels, base seed, replacement pool and targets."""

    levels: tuple[float, ...]
    seed: int = 0
    pool: Optional[tuple[str, ...]] = None  # None: the taxonomy's own node surfaces
    replace_target: str = REPLACE_CHILD_ONLY

    def __post_init__(self):
        if any(not 0.0 <= lvl <= 1.0 for lvl in self.levels):
            raise InputError("noise levels must lie in [0, 1]")
        if list(self.levels) != sorted(self.levels):
            raise InputError("noise levels must be sorted ascending")
        if self.replace_target not in (REPLACE_CHILD_ONLY, REPLACE_ANY_NODE):
            raise InputError(f"unknown replace_target {self.replace_target!r}")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def degrade(
    taxonomy: Taxonomy,
    fraction: float,
    seed: int,
    spec: NoiseSpec,
) -> Taxonomy:
    """Replace round(fraction * |targets|) target concepts with pool members.

    Each replacement is drawn uniformly from the pool, excluding the surface
    being replaced.  Deterministic for a given (taxonomy, fraction, seed,
    spec).
    """
    if not 0.0 <= fraction <= 1.0:
        raise InputError(f"noise fraction must be in [0, 1], got {fraction}")
    if spec.pool is not None:
        pool = tuple(dict.fromkeys(" ".join(p.split()).lower() for p in spec.pool))
    else:
        pool = tuple(n.surface for n in taxonomy.nodes)
    if len(set(pool)) < 2:
        raise InputError("replacement pool must contain at least 2 distinct surfaces")

    if spec.replace_target == REPLACE_CHILD_ONLY:
        targets = taxonomy.child_node_ids()
    else:
        targets = [n.node_id for n in taxonomy.nodes]
    n_replace = _round_half_up(fraction * len(targets))
    if n_replace == 0:
        return taxonomy

    rng = random.Random(seed)
    picked = sorted(rng.sample(targets, n_replace))
    replacements: dict[int, str] = {}
    for node_id in picked:
        old = taxonomy.nodes[node_id].surface
        candidates = [p for p in pool if p != old]
        replacements[node_id] = rng.choice(candidates)

    degraded = taxonomy.with_surfaces(replacements, strict=False)
    problems = degraded.structural_anomalies()
    if problems:
        logger.warning(
            "degraded %s at %.2f (seed %d): %s", taxonomy.name, fraction, seed,
            "; ".join(problems),
        )
    return degraded


@dataclass(frozen=True)
class SweepPoint:
    level: float
    scores: tuple[float, ...]

    @property
    def mean(self) -> float:
        return statistics.fmean(self.scores)

    @property
    def std(self) -> float:
        return statistics.pstdev(self.scores)


def sweep(
    taxonomy: Taxonomy,
    spec: NoiseSpec,
    backend: FillMaskBackend,
    templates: Sequence[PromptTemplate] | None = None,
    k: int = 10,
    policy: Optional[MatchPolicy] = None,
    repeats: int = 1,
    parallelism: int = 1,
) -> list[SweepPoint]:
    """Score the taxonomy at each noise level, averaged over seeded repeats.

    Repeat r uses seed ``spec.seed + r``, so curves are reproducible across
    machines and can be extended by raising ``repeats``.
    """
    if repeats < 1:
        raise InputError(f"repeats must be >= 1, got {repeats}")
    points = []
    for level in spec.levels:
        scores = []
        for repeat in range(repeats):
            degraded = degrade(taxonomy, level, spec.seed + repeat, spec)
            result = score_taxonomy(
                degraded, backend, templates, k, policy, parallelism=parallelism
            )
            scores.append(result.score.score)
        points.append(SweepPoint(level, tuple(scores)))
    return points


def write_sweep_csv(path: str, points: Sequence[SweepPoint]) -> None:
    """Per-repeat rows under "level,repeat,score", then aggregates under "level,mean,std"."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "repeat", "score"])
        for point in points:
            for repeat, score in enumerate(point.scores):
                writer.writerow([point.level, repeat, f"{score:.6f}"])
        writer.writerow(["level", "mean", "std"])
        for point in points:
            writer.writerow([point.level, f"{point.mean:.6f}", f"{point.std:.6f}"])


def plot_sweep(path: str, points: Sequence[SweepPoint], title: str = "") -> None:
    """Optional score-vs-noise plot; needs matplotlib (the 'plot' extra)."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise InputError("plotting requires matplotlib (install the 'plot' extra)") from exc
    levels = [p.level for p in points]
    means = [p.mean for p in points]
    stds = [p.std for p in points]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(levels, means, yerr=stds, marker="o", capsize=3)
    ax.set_xlabel("noise level")
    ax.set_ylabel("relation accuracy")
    ax.set_ylim(-0.02, 1.02)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
