"""Second-order biased random walks and (focus, context) pair extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid, IsolatedNode, NotNeighbor
from .graph import Graph


@dataclass
class WalkConfig:
    p: float = 1.0  # return parameter
    q: float = 1.0  # in-out parameter
    r: int = 5      # walks per start node
    l: int = 40     # walk length in nodes
    k: int = 10     # context window length in nodes

    def validate(self):
        problems = []
        if not self.p > 0:
            problems.append(f"p must be > 0, got {self.p}")
        if not self.q > 0:
            problems.append(f"q must be > 0, got {self.q}")
        if self.r < 1:
            problems.append(f"r must be >= 1, got {self.r}")
        if self.k < 2:
            problems.append(f"k must be >= 2, got {self.k}")
        if self.l < self.k:
            problems.append(f"l must be >= k, got l={self.l} k={self.k}")
        if problems:
            raise ConfigInvalid(problems)


def second_order_weight(g: Graph, prev: int, cur: int, nxt: int, p: float, q: float) -> float:
    """Unnormalized transition weight for the step cur -> nxt given we came from prev."""
    if not np.isin(nxt, g.adjacency[cur]):
        raise NotNeighbor(cur, nxt)
    if nxt == prev:
        return 1.0 / p
    if g.has_edge(prev, nxt):
        return 1.0
    return 1.0 / q


class AliasTable:
    """O(1) sampler over a discrete distribution (Vose alias method)."""

    def __init__(self, probs: np.ndarray):
        probs = np.asarray(probs, dtype=np.float64)
        k = len(probs)
        self.accept = np.zeros(k)
        self.alias = np.zeros(k, dtype=np.int64)
        scaled = probs * k
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        scaled = scaled.copy()
        while small and large:
            s = small.pop()
            g = large.pop()
            self.accept[s] = scaled[s]
            self.alias[s] = g
            scaled[g] -= 1.0 - scaled[s]
            (small if scaled[g] < 1.0 else large).append(g)
        for i in large + small:
            self.accept[i] = 1.0
            self.alias[i] = i

    def __len__(self):
        return len(self.accept)

    def draw(self, rng: np.random.Generator) -> int:
        i = int(rng.integers(len(self.accept)))
        if rng.random() < self.accept[i]:
            return i
        return int(self.alias[i])

    def probabilities(self) -> np.ndarray:
        """Exact distribution this table samples from (for verification)."""
        k = len(self.accept)
        probs = self.accept.copy()
        for i in range(k):
            if self.alias[i] != i:
                probs[self.alias[i]] += 1.0 - self.accept[i]
        return probs / k


class TransitionTables:
    """Per-directed-edge alias samplers for the second-order walk bias.

    When p == q == 1 all weights are uniform and no edge tables are built;
    steps then sample neighbors directly.
    """

    def __init__(self, g: Graph, cfg: WalkConfig):
        cfg.validate()
        for v in range(g.node_count):
            if len(g.adjacency[v]) == 0:
                raise IsolatedNode(v)
        self.graph = g
        self.cfg = cfg
        self.uniform = cfg.p == 1.0 and cfg.q == 1.0
        self.edge_tables: dict[tuple[int, int], AliasTable] = {}
        if self.uniform:
            return
        neighbor_sets = [set(int(u) for u in g.adjacency[v]) for v in range(g.node_count)]
        for prev, cur in _directed_edges(g):
            nbrs = g.adjacency[cur]
            weights = np.empty(len(nbrs))
            prev_nbrs = neighbor_sets[prev]
            for j, nxt in enumerate(nbrs):
                nxt = int(nxt)
                if nxt == prev:
                    weights[j] = 1.0 / cfg.p
                elif nxt in prev_nbrs:
                    weights[j] = 1.0
                else:
                    weights[j] = 1.0 / cfg.q
            self.edge_tables[(prev, cur)] = AliasTable(weights / weights.sum())

    def step(self, prev: int, cur: int, rng: np.random.Generator) -> int:
        nbrs = self.graph.adjacency[cur]
        if self.uniform:
            return int(nbrs[rng.integers(len(nbrs))])
        return int(nbrs[self.edge_tables[(prev, cur)].draw(rng)])


def _directed_edges(g: Graph):
    for a, b in g.hierarchy_edges:
        yield a, b
        yield b, a


def build_alias_tables(g: Graph, cfg: WalkConfig) -> TransitionTables:
    return TransitionTables(g, cfg)


def generate_walks(g: Graph, cfg: WalkConfig, seed: int, tables: TransitionTables | None = None) -> np.ndarray:
    """All walks as an (r * |V|, l) int32 array, grouped by start node.

    Each start node uses its own RNG stream derived from (seed, node id), so
    the output is identical regardless of generation order.
    """
    if tables is None:
        tables = build_alias_tables(g, cfg)
    walks = np.empty((g.node_count * cfg.r, cfg.l), dtype=np.int32)
    row = 0
    for start in range(g.node_count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1, start]))
        for _ in range(cfg.r):
            walk = walks[row]
            walk[0] = start
            nbrs = g.adjacency[start]
            walk[1] = nbrs[rng.integers(len(nbrs))]
            for t in range(2, cfg.l):
                walk[t] = tables.step(int(walk[t - 2]), int(walk[t - 1]), rng)
            row += 1
    return walks


def extract_pairs(walks: np.ndarray, k: int) -> np.ndarray:
    """(focus, context) pairs from sliding windows: every node in a walk is a
    focus, paired with the next k-1 nodes of its walk. Returns (P, 2) int32."""
    n_walks, l = walks.shape
    if k > l:
        raise ConfigInvalid([f"k must be <= walk length, got k={k} l={l}"])
    chunks = []
    for j in range(1, k):
        if j >= l:
            break
        chunk = np.stack([walks[:, : l - j], walks[:, j:]], axis=2)
        chunks.append(chunk.reshape(-1, 2))
    return np.concatenate(chunks, axis=0).astype(np.int32)


def pair_count(n_walks: int, l: int, k: int) -> int:
    """Closed form for the number of pairs extract_pairs emits."""
    per_walk = sum(min(k - 1, l - 1 - t) for t in range(l))
    return n_walks * per_walk


def write_walks(g: Graph, walks: np.ndarray, path):
    """One walk per line, space-separated external keys."""
    with open(path, "w", encoding="utf-8") as fh:
        for walk in walks:
            fh.write(" ".join(g.keys[v] for v in walk) + "\n")
