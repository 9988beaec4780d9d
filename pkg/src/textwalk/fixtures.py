"""Deterministic synthetic hierarchies with compositional descriptors.

The generator grows one tree: base concepts form a chain of subtype edges
(each with a fresh one-word descriptor), and every node spawns one child per
modifier whose descriptor is the modifier prepended to the parent's tokens.
A fixed minority of deeper children instead get fresh "A of B" descriptors,
mimicking subtype edges whose wording shares nothing with the parent. Extra
cross edges create exactly that many removable (non-bridge) edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigInvalid

MANIFEST_HEADER = "# textwalk fixture manifest v1"

# one fresh-descriptor child per this many compositional children (levels >= 2)
_COMPOSITIONAL_PER_FRESH = 4


@dataclass
class FixtureSpec:
    base_concepts: int
    modifiers: list[str]
    depth: int
    cross_links: int
    seed: int

    def validate(self):
        problems = []
        if self.base_concepts < 10:
            problems.append(f"base_concepts must be >= 10, got {self.base_concepts}")
        if self.depth < 2:
            problems.append(f"depth must be >= 2, got {self.depth}")
        if not self.modifiers:
            problems.append("modifiers must be non-empty")
        if self.cross_links < 0:
            problems.append(f"cross_links must be >= 0, got {self.cross_links}")
        if problems:
            raise ConfigInvalid(problems)


@dataclass
class FixtureResult:
    edges_path: Path
    descriptors_path: Path
    manifest_path: Path
    manifest: dict


def generate(spec: FixtureSpec, out_dir) -> FixtureResult:
    """Write edges.tsv, descriptors.tsv, and manifest.txt into out_dir."""
    spec.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0xF1C]))

    descriptors: list[list[str]] = []
    levels: list[int] = []
    edges: list[tuple[int, int]] = []  # (child, parent) node indices
    edge_kind: list[str] = []

    fresh_counter = 0

    def fresh_lexeme() -> str:
        nonlocal fresh_counter
        fresh_counter += 1
        return f"lex{fresh_counter:04d}"

    def add_node(tokens: list[str], level: int) -> int:
        descriptors.append(tokens)
        levels.append(level)
        return len(descriptors) - 1

    # Level 0: chained base concepts.
    for i in range(spec.base_concepts):
        node = add_node([fresh_lexeme()], 0)
        if i > 0:
            edges.append((node, node - 1))
            edge_kind.append("chain")

    comp_since_fresh = 0
    level_nodes = list(range(spec.base_concepts))
    for level in range(1, spec.depth):
        next_nodes = []
        for parent in level_nodes:
            for modifier in spec.modifiers:
                child = add_node([modifier] + descriptors[parent], level)
                edges.append((child, parent))
                edge_kind.append("compositional")
                next_nodes.append(child)
                if level >= 2:
                    comp_since_fresh += 1
                    if comp_since_fresh == _COMPOSITIONAL_PER_FRESH:
                        comp_since_fresh = 0
                        extra = add_node(
                            [fresh_lexeme(), "of", fresh_lexeme()], level
                        )
                        edges.append((extra, parent))
                        edge_kind.append("fresh")
                        next_nodes.append(extra)
        level_nodes = next_nodes

    n = len(descriptors)
    existing = {(min(c, p), max(c, p)) for c, p in edges}
    cross_added = 0
    while cross_added < spec.cross_links:
        a, b = (int(x) for x in rng.integers(0, n, size=2))
        if a == b:
            continue
        und = (min(a, b), max(a, b))
        if und in existing:
            continue
        existing.add(und)
        # orient deeper node as the child; ties broken toward the larger id
        if (levels[a], a) > (levels[b], b):
            edges.append((a, b))
        else:
            edges.append((b, a))
        edge_kind.append("cross")
        cross_added += 1

    keys = [f"N{i:05d}" for i in range(n)]
    edges_path = out_dir / "edges.tsv"
    descriptors_path = out_dir / "descriptors.tsv"
    manifest_path = out_dir / "manifest.txt"

    with open(edges_path, "w", encoding="utf-8") as fh:
        for c, p in edges:
            fh.write(f"{keys[c]}\t{keys[p]}\n")
    with open(descriptors_path, "w", encoding="utf-8") as fh:
        for i in range(n):
            fh.write(f"{keys[i]}\t{' '.join(descriptors[i])}\n")

    adjacency = [[] for _ in range(n)]
    for c, p in edges:
        adjacency[c].append(p)
        adjacency[p].append(c)
    bridges = _bridges([sorted(a) for a in adjacency])

    vocab = set()
    for toks in descriptors:
        vocab.update(toks)

    kind_counts = {k: edge_kind.count(k) for k in ("chain", "compositional", "fresh", "cross")}
    manifest = {
        "seed": spec.seed,
        "base_concepts": spec.base_concepts,
        "modifiers": ",".join(spec.modifiers),
        "depth": spec.depth,
        "cross_links": spec.cross_links,
        "nodes": n,
        "edges": len(edges),
        "hierarchy_edges": len(edges) - kind_counts["cross"],
        "chain_edges": kind_counts["chain"],
        "compositional_edges": kind_counts["compositional"],
        "fresh_descriptor_edges": kind_counts["fresh"],
        "cross_edges": kind_counts["cross"],
        "vocabulary": len(vocab),
        "bridge_count": len(bridges),
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write(MANIFEST_HEADER + "\n")
        for key, value in manifest.items():
            fh.write(f"{key} {value}\n")
        fh.write("[bridges]\n")
        for a, b in sorted(bridges):
            fh.write(f"{keys[a]}\t{keys[b]}\n")

    manifest["bridges"] = [(keys[a], keys[b]) for a, b in sorted(bridges)]
    return FixtureResult(edges_path, descriptors_path, manifest_path, manifest)


def read_manifest(path) -> dict:
    """Parse a fixture manifest back into a dict (bridges as key pairs)."""
    manifest = {}
    bridges = []
    in_bridges = False
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if line == "[bridges]":
                in_bridges = True
                continue
            if in_bridges:
                a, b = line.split("\t")
                bridges.append((a, b))
            else:
                key, value = line.split(" ", 1)
                manifest[key] = int(value) if value.lstrip("-").isdigit() else value
    manifest["bridges"] = bridges
    return manifest


def _bridges(adjacency) -> list[tuple[int, int]]:
    """Iterative Tarjan bridge finding over a simple undirected adjacency list."""
    n = len(adjacency)
    disc = [-1] * n
    low = [0] * n
    bridges = []
    counter = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        stack = [(root, -1, 0)]
        while stack:
            v, parent, i = stack[-1]
            if i == 0:
                disc[v] = low[v] = counter
                counter += 1
            if i < len(adjacency[v]):
                stack[-1] = (v, parent, i + 1)
                u = int(adjacency[v][i])
                if u == parent:
                    continue
                if disc[u] != -1:
                    low[v] = min(low[v], disc[u])
                else:
                    stack.append((u, v, 0))
            else:
                stack.pop()
                if parent != -1:
                    low[parent] = min(low[parent], low[v])
                    if low[v] > disc[parent]:
                        bridges.append((min(parent, v), max(parent, v)))
    return bridges
