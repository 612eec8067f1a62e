"""Candidate taxonomies: concepts, parent-child edges, parsing and serialization.

A taxonomy is reduced to an ordered set of unique (parent, child) edges over
lowercased concept surfaces.  Multiple parents per child are allowed (the edge
relation is a DAG, not necessarily a tree), but self-loops and cycles are
rejected at parse time.  Instances are immutable and safe to share across
scoring workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from taxoprobe.errors import TaxonomyParseError, TaxonomyStructureError


def _normalize_surface(surface: str) -> str:
    return " ".join(surface.split()).lower()


@dataclass(frozen=True)
class Concept:
    """A single taxonomy node: a lowercased surface plus a stable node id."""

    surface: str
    node_id: int

    def __post_init__(self):
        if not self.surface.strip():
            raise TaxonomyParseError("empty concept surface")
        if "\t" in self.surface or "\n" in self.surface:
            raise TaxonomyParseError(f"surface contains tab/newline: {self.surface!r}")


class Taxonomy:
    """Immutable concept hierarchy with a deterministic edge order.

    Nodes are identity-bearing: noise degradation rewrites surfaces in place
    while node ids and the edge structure stay fixed, so node and edge counts
    are preserved.
    """

    def __init__(
        self,
        name: str,
        nodes: Sequence[Concept],
        edges: Sequence[tuple[int, int]],
        strict: bool = True,
    ):
        self.name = name
        self._nodes = tuple(nodes)
        self._edges = tuple(edges)
        for pid, cid in self._edges:
            if not (0 <= pid < len(self._nodes) and 0 <= cid < len(self._nodes)):
                raise TaxonomyStructureError(f"edge references unknown node: ({pid}, {cid})")
        if strict:
            problems = self.structural_anomalies()
            if problems:
                raise TaxonomyStructureError(problems[0])

    @classmethod
    def from_edge_pairs(
        cls,
        name: str,
        pairs: Iterable[tuple[str, str]],
        strict: bool = True,
    ) -> "Taxonomy":
        """Build from (parent, child) surface pairs, deduplicating in first-occurrence order."""
        nodes: list[Concept] = []
        by_surface: dict[str, int] = {}
        edges: list[tuple[int, int]] = []
        seen: set[tuple[str, str]] = set()

        def intern(surface: str) -> int:
            key = _normalize_surface(surface)
            if key not in by_surface:
                by_surface[key] = len(nodes)
                nodes.append(Concept(key, len(nodes)))
            return by_surface[key]

        for parent, child in pairs:
            ps, cs = _normalize_surface(parent), _normalize_surface(child)
            if (ps, cs) in seen:
                continue
            seen.add((ps, cs))
            edges.append((intern(ps), intern(cs)))
        return cls(name, nodes, edges, strict=strict)

    # -- views ---------------------------------------------------------------

    @property
    def nodes(self) -> tuple[Concept, ...]:
        return self._nodes

    @property
    def edges(self) -> tuple[tuple[Concept, Concept], ...]:
        return tuple((self._nodes[p], self._nodes[c]) for p, c in self._edges)

    def edge_set(self) -> list[tuple[str, str]]:
        """Unique (parent, child) surface pairs in first-occurrence order.

        The length of this list is the denominator of the relation-accuracy
        score.  The order is stable across calls and process runs.
        """
        return [(self._nodes[p].surface, self._nodes[c].surface) for p, c in self._edges]

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    def node_levels(self) -> dict[int, int]:
        """Depth per node id: 0 for roots, child depth = max parent depth + 1."""
        children: dict[int, list[int]] = {}
        indeg = {i: 0 for i in range(len(self._nodes))}
        for p, c in self._edges:
            children.setdefault(p, []).append(c)
            indeg[c] += 1
        levels = {i: 0 for i, d in indeg.items() if d == 0}
        queue = sorted(levels)
        while queue:
            node = queue.pop(0)
            for child in children.get(node, []):
                depth = levels[node] + 1
                if depth > levels.get(child, -1):
                    levels[child] = depth
                    queue.append(child)
        return levels

    def child_node_ids(self) -> list[int]:
        """Ids of nodes that appear as the child of at least one edge."""
        seen: list[int] = []
        for _, c in self._edges:
            if c not in seen:
                seen.append(c)
        return seen

    def with_surfaces(self, replacements: dict[int, str], strict: bool = False) -> "Taxonomy":
        """Copy with some node surfaces rewritten (node ids and edges unchanged)."""
        nodes = [
            Concept(_normalize_surface(replacements.get(n.node_id, n.surface)), n.node_id)
            for n in self._nodes
        ]
        return Taxonomy(self.name, nodes, self._edges, strict=strict)

    # -- validation ----------------------------------------------------------

    def structural_anomalies(self) -> list[str]:
        """Duplicate surface edges, self-loops and cycles, as human-readable strings.

        Strict construction raises on the first anomaly; degraded taxonomies
        keep them (so edge counts are preserved) and report them instead.
        """
        problems = []
        seen: set[tuple[str, str]] = set()
        for p, c in self._edges:
            pair = (self._nodes[p].surface, self._nodes[c].surface)
            if pair in seen:
                problems.append(f"duplicate edge ({pair[0]}, {pair[1]})")
            seen.add(pair)
            if pair[0] == pair[1]:
                problems.append(f"self-loop on {pair[0]!r}")
        cycle_edge = self._find_cycle_edge()
        if cycle_edge is not None:
            p, c = cycle_edge
            problems.append(
                f"cycle through edge ({self._nodes[p].surface}, {self._nodes[c].surface})"
            )
        return problems

    def _find_cycle_edge(self) -> tuple[int, int] | None:
        # Kahn's algorithm over surface-merged nodes; any edge left after
        # peeling sits on a cycle.
        merged: dict[str, int] = {}
        for n in self._nodes:
            merged.setdefault(n.surface, n.node_id)
        edges = [
            (merged[self._nodes[p].surface], merged[self._nodes[c].surface])
            for p, c in self._edges
            if self._nodes[p].surface != self._nodes[c].surface
        ]
        indeg: dict[int, int] = {}
        out: dict[int, list[int]] = {}
        for p, c in edges:
            indeg[c] = indeg.get(c, 0) + 1
            indeg.setdefault(p, 0)
            out.setdefault(p, []).append(c)
        queue = [n for n, d in indeg.items() if d == 0]
        alive = dict(indeg)
        while queue:
            node = queue.pop()
            for child in out.get(node, []):
                alive[child] -= 1
                if alive[child] == 0:
                    queue.append(child)
        remaining = {n for n, d in alive.items() if d > 0}
        for p, c in edges:
            if p in remaining and c in remaining:
                return (p, c)
        return None

    # -- dunder --------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Taxonomy):
            return NotImplemented
        return self.name == other.name and self.edge_set() == other.edge_set()

    def __repr__(self) -> str:
        return f"Taxonomy({self.name!r}, nodes={len(self._nodes)}, edges={len(self._edges)})"


# -- parsing -------------------------------------------------------------


def parse_edge_list(text: str, name: str = "taxonomy") -> Taxonomy:
    """Parse the tab-separated edge-list format.

    One ``parent<TAB>child`` pair per line; blank lines and ``#`` comments are
    skipped.  Surfaces are lowercased and whitespace-normalized; repeated
    pairs collapse to the first occurrence.
    """
    pairs: list[tuple[str, str]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if raw.count("\t") != 1:
            raise TaxonomyParseError(
                f"expected exactly one tab separator, got {raw.count(chr(9))}", line_no
            )
        parent, child = raw.split("\t")
        if not parent.strip() or not child.strip():
            raise TaxonomyParseError("empty parent or child field", line_no)
        pairs.append((parent, child))
    return Taxonomy.from_edge_pairs(name, pairs)


def parse_tree(text: str, name: str = "taxonomy") -> Taxonomy:
    """Parse the nested JSON tree format: objects with "name" and "children".

    Children entries may be nested objects or bare strings (leaf shorthand).
    Edges come out in depth-first order.
    """
    try:
        root = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TaxonomyParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(root, dict):
        raise TaxonomyParseError("tree document must have a single root object")

    pairs: list[tuple[str, str]] = []
    surfaces: list[str] = []

    def walk(node, path: str):
        if isinstance(node, str):
            node = {"name": node}
        if not isinstance(node, dict) or "name" not in node:
            raise TaxonomyParseError(f"node under {path!r} lacks a \"name\" field")
        node_name = node["name"]
        if not isinstance(node_name, str) or not node_name.strip():
            raise TaxonomyParseError(f"empty node name under {path!r}")
        surfaces.append(_normalize_surface(node_name))
        children = node.get("children", [])
        if not isinstance(children, list):
            raise TaxonomyParseError(f"\"children\" of {node_name!r} is not an array")
        seen_names = set()
        for child in children:
            child_name = child if isinstance(child, str) else (
                child.get("name") if isinstance(child, dict) else None
            )
            if isinstance(child_name, str):
                key = _normalize_surface(child_name)
                if key in seen_names:
                    raise TaxonomyParseError(
                        f"duplicate sibling name {child_name!r} under {node_name!r}"
                    )
                seen_names.add(key)
                pairs.append((node_name, child_name))
            walk(child, node_name)

    walk(root, "<root>")
    tax = Taxonomy.from_edge_pairs(name, pairs)
    if not tax.nodes and surfaces:
        # single-node tree: zero edges but the root still exists
        return Taxonomy(name, [Concept(surfaces[0], 0)], [])
    return tax


def parse_taxonomy_file(path: str, name: str | None = None, fmt: str = "auto") -> Taxonomy:
    """Load a taxonomy from disk, sniffing edge-list vs tree format by default."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if name is None:
        import os

        name = os.path.splitext(os.path.basename(path))[0]
    if fmt == "auto":
        fmt = "tree" if text.lstrip().startswith("{") else "edges"
    if fmt == "tree":
        return parse_tree(text, name)
    if fmt == "edges":
        return parse_edge_list(text, name)
    raise TaxonomyParseError(f"unknown taxonomy format {fmt!r}")


# -- serialization -------------------------------------------------------


def to_edge_list(taxonomy: Taxonomy) -> str:
    return "".join(f"{p}\t{c}\n" for p, c in taxonomy.edge_set())


def to_tree(taxonomy: Taxonomy) -> str:
    """Serialize a tree-shaped taxonomy to the nested JSON format.

    Raises if the taxonomy is not a single-rooted tree (a node with several
    parents cannot be represented).
    """
    children: dict[str, list[str]] = {}
    parent_of: dict[str, str] = {}
    for p, c in taxonomy.edge_set():
        if c in parent_of:
            raise TaxonomyStructureError(f"node {c!r} has multiple parents; not a tree")
        parent_of[c] = p
        children.setdefault(p, []).append(c)
    roots = [n.surface for n in taxonomy.nodes if n.surface not in parent_of]
    if len(roots) != 1:
        raise TaxonomyStructureError(f"expected a single root, found {len(roots)}")

    def build(surface: str) -> dict:
        return {"name": surface, "children": [build(c) for c in children.get(surface, [])]}

    return json.dumps(build(roots[0]), indent=2, sort_keys=True) + "\n"


def iter_edges(taxonomy: Taxonomy) -> Iterator[tuple[str, str]]:
    yield from taxonomy.edge_set()
