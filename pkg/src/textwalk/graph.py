"""Text-attributed network: loading, validation, and traversal queries.

Edges are stored twice: as a symmetrized undirected adjacency (what walks and
embeddings consume) and as the original directed (child, parent) pairs, which
hard negative sampling needs for ancestor semantics.
"""

from __future__ import annotations

import logging
import string
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DescriptorEmpty,
    MalformedLine,
    MissingDescriptor,
    SelfLoop,
)

log = logging.getLogger("textwalk")

_STRIP_CHARS = string.punctuation


def tokenize(text: str) -> list[str]:
    """Lowercase, whitespace-split, and strip punctuation off token edges.

    Raises DescriptorEmpty if nothing survives.
    """
    tokens = []
    for raw in text.lower().split():
        tok = raw.strip(_STRIP_CHARS)
        if tok:
            tokens.append(tok)
    if not tokens:
        raise DescriptorEmpty()
    return tokens


class Vocabulary:
    """Bijection between token strings and dense indices [0, |W|)."""

    def __init__(self, words: list[str]):
        self.words = list(words)
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("vocabulary words must be unique")

    @property
    def size(self) -> int:
        return len(self.words)

    def __len__(self) -> int:
        return len(self.words)


@dataclass
class Graph:
    """Undirected text-attributed network with retained edge direction.

    Node ids are dense ints in [0, node_count), assigned by first appearance
    in the edge file. ``adjacency[v]`` is a sorted int32 array of neighbors.
    ``hierarchy_edges`` keeps the input (child, parent) pairs in input order,
    one entry per undirected edge.
    """

    keys: list[str]
    adjacency: list[np.ndarray]
    hierarchy_edges: list[tuple[int, int]]
    descriptors: list[np.ndarray]
    vocab: Vocabulary
    duplicate_edges_collapsed: int = 0
    key_to_id: dict = field(default_factory=dict)
    _parents: list[np.ndarray] = field(default=None, repr=False)
    _children: list[np.ndarray] = field(default=None, repr=False)
    _edge_set: set = field(default=None, repr=False)

    def __post_init__(self):
        if not self.key_to_id:
            self.key_to_id = {k: i for i, k in enumerate(self.keys)}
        if self._edge_set is None:
            self._edge_set = {
                (min(a, b), max(a, b)) for a, b in self.hierarchy_edges
            }
        if self._parents is None:
            up = [[] for _ in self.keys]
            down = [[] for _ in self.keys]
            for child, parent in self.hierarchy_edges:
                up[child].append(parent)
                down[parent].append(child)
            self._parents = [np.array(sorted(p), dtype=np.int32) for p in up]
            self._children = [np.array(sorted(c), dtype=np.int32) for c in down]

    @property
    def node_count(self) -> int:
        return len(self.keys)

    @property
    def edge_count(self) -> int:
        return len(self.hierarchy_edges)

    def neighbors(self, v: int) -> np.ndarray:
        return self.adjacency[v]

    def parents(self, v: int) -> np.ndarray:
        return self._parents[v]

    def children(self, v: int) -> np.ndarray:
        return self._children[v]

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self._edge_set

    def descriptor_tokens(self, v: int) -> list[str]:
        return [self.vocab.words[i] for i in self.descriptors[v]]

    def without_edges(self, removed: set[tuple[int, int]]) -> "Graph":
        """Copy of this graph minus the given undirected edges (same node ids)."""
        removed = {(min(a, b), max(a, b)) for a, b in removed}
        kept = [
            (c, p)
            for c, p in self.hierarchy_edges
            if (min(c, p), max(c, p)) not in removed
        ]
        return _from_id_pairs(self.keys, kept, self.descriptors, self.vocab)


def _from_id_pairs(keys, pairs, descriptors, vocab) -> Graph:
    """Build a Graph from id-level (child, parent) pairs over an existing node set."""
    nbrs = [set() for _ in keys]
    for c, p in pairs:
        nbrs[c].add(p)
        nbrs[p].add(c)
    adjacency = [np.array(sorted(s), dtype=np.int32) for s in nbrs]
    return Graph(
        keys=list(keys),
        adjacency=adjacency,
        hierarchy_edges=list(pairs),
        descriptors=list(descriptors),
        vocab=vocab,
    )


def build_graph(edge_pairs, descriptor_texts) -> Graph:
    """Assemble a Graph from (child_key, parent_key) pairs and key -> text mapping.

    Shares all validation with load_graph; node ids follow first appearance
    in the edge sequence.
    """
    keys: list[str] = []
    key_to_id: dict[str, int] = {}

    def intern(key: str) -> int:
        if key not in key_to_id:
            key_to_id[key] = len(keys)
            keys.append(key)
        return key_to_id[key]

    directed: list[tuple[int, int]] = []
    seen_undirected: set[tuple[int, int]] = set()
    duplicates = 0
    for child_key, parent_key in edge_pairs:
        if child_key == parent_key:
            raise SelfLoop(child_key)
        c, p = intern(child_key), intern(parent_key)
        und = (min(c, p), max(c, p))
        if und in seen_undirected:
            duplicates += 1
            continue
        seen_undirected.add(und)
        directed.append((c, p))
    if duplicates:
        log.warning("collapsed %d duplicate edges", duplicates)

    tokens_by_id: list[list[str]] = [None] * len(keys)
    for key, text in descriptor_texts.items():
        if key not in key_to_id:
            continue  # descriptor for a node absent from the edge file
        try:
            tokens_by_id[key_to_id[key]] = tokenize(text)
        except DescriptorEmpty:
            raise DescriptorEmpty(key)
    for i, toks in enumerate(tokens_by_id):
        if toks is None:
            raise MissingDescriptor(keys[i])

    words: list[str] = []
    word_index: dict[str, int] = {}
    descriptors = []
    for toks in tokens_by_id:
        row = []
        for w in toks:
            if w not in word_index:
                word_index[w] = len(words)
                words.append(w)
            row.append(word_index[w])
        descriptors.append(np.array(row, dtype=np.int32))

    g = _from_id_pairs(keys, directed, descriptors, Vocabulary(words))
    g.duplicate_edges_collapsed = duplicates
    return g


def _parse_two_columns(path):
    """Yield (line_no, first_field, rest) for non-comment lines of a TSV file."""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise MalformedLine(path, line_no, f"expected two tab-separated fields, got {line!r}")
            yield line_no, parts[0].strip(), parts[1].strip()


def load_graph(edges_path, descriptors_path) -> Graph:
    """Load a graph from an edges TSV (child<TAB>parent) and a descriptors TSV."""
    edge_pairs = [(c, p) for _, c, p in _parse_two_columns(edges_path)]
    descriptor_texts = {}
    extra = 0
    for _, key, text in _parse_two_columns(descriptors_path):
        if key in descriptor_texts:
            extra += 1
            continue  # first occurrence wins
        descriptor_texts[key] = text
    if extra:
        log.warning("ignored %d repeated descriptor lines", extra)
    return build_graph(edge_pairs, descriptor_texts)


def write_graph(g: Graph, edges_path, descriptors_path):
    """Serialize back to the input formats (descriptor text is the token join)."""
    with open(edges_path, "w", encoding="utf-8") as fh:
        for c, p in g.hierarchy_edges:
            fh.write(f"{g.keys[c]}\t{g.keys[p]}\n")
    with open(descriptors_path, "w", encoding="utf-8") as fh:
        for i, key in enumerate(g.keys):
            fh.write(f"{key}\t{' '.join(g.descriptor_tokens(i))}\n")


def hop_distance(g: Graph, a: int, b: int, cap: int | None = None):
    """Shortest undirected path length from a to b, or None if beyond cap/unreachable."""
    if a == b:
        return 0
    seen = {a}
    frontier = [a]
    dist = 0
    while frontier:
        dist += 1
        if cap is not None and dist > cap:
            return None
        nxt = []
        for v in frontier:
            for u in g.adjacency[v]:
                u = int(u)
                if u in seen:
                    continue
                if u == b:
                    return dist
                seen.add(u)
                nxt.append(u)
        frontier = nxt
    return None


def is_connected(g: Graph) -> bool:
    """True iff a BFS from node 0 reaches every node."""
    if g.node_count == 0:
        raise ValueError("graph has no nodes")
    seen = np.zeros(g.node_count, dtype=bool)
    seen[0] = True
    queue = deque([0])
    reached = 1
    while queue:
        v = queue.popleft()
        for u in g.adjacency[v]:
            if not seen[u]:
                seen[u] = True
                reached += 1
                queue.append(int(u))
    return reached == g.node_count


def _directed_reachable(g: Graph, start: int, goal: int, max_depth: int, up: bool) -> bool:
    frontier = {start}
    seen = {start}
    for _ in range(max_depth):
        nxt = set()
        for v in frontier:
            step = g.parents(v) if up else g.children(v)
            for u in step:
                u = int(u)
                if u == goal:
                    return True
                if u not in seen:
                    seen.add(u)
                    nxt.add(u)
        if not nxt:
            return False
        frontier = nxt
    return False


def is_hierarchy_relative(g: Graph, a: int, b: int, max_depth: int) -> bool:
    """True iff one node reaches the other along directed hierarchy edges within max_depth."""
    if a == b:
        return True
    return _directed_reachable(g, a, b, max_depth, up=True) or _directed_reachable(
        g, a, b, max_depth, up=False
    )


def ancestors_at_depth(g: Graph, v: int, lo: int, hi: int) -> list[int]:
    """Ancestors of v whose minimum directed distance from v lies in [lo, hi]."""
    out = []
    seen = {v}
    frontier = {v}
    for depth in range(1, hi + 1):
        nxt = set()
        for node in frontier:
            for p in g.parents(node):
                p = int(p)
                if p not in seen:
                    seen.add(p)
                    nxt.add(p)
        if depth >= lo:
            out.extend(nxt)
        frontier = nxt
        if not frontier:
            break
    return sorted(out)
