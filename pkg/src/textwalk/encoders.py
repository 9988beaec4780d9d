"""Descriptor encoders producing node embeddings, with exact analytic gradients.

Every node has two embeddings (focus / context), built from two disjoint
parameter sets. Content encoders compose word embeddings; the lookup kind
keeps one table row per node, as in structure-only embedding methods.

The forward/backward math lives in batched kernels operating on padded
(batch, position) token matrices; the per-node operations wrap them with
batch size 1 so there is a single source of truth for the gradients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DescriptorEmpty, NonFinite, StaleBackward
from .graph import Graph

FOCUS = "focus"
CONTEXT = "context"

_CELL_PARAM_NAMES = ("w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h")


class EncoderKind(str, Enum):
    LOOKUP = "lookup"
    AVG = "avg"
    GRU = "gru"
    BIGRU_MAX_RES = "bigru-max-res"

    @property
    def uses_words(self) -> bool:
        return self is not EncoderKind.LOOKUP

    @property
    def cell_directions(self) -> tuple[str, ...]:
        if self is EncoderKind.GRU:
            return ("fwd",)
        if self is EncoderKind.BIGRU_MAX_RES:
            return ("fwd", "bwd")
        return ()


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


@dataclass
class GruCellParams:
    """Gate parameters; matrices are (d, d) applied as x @ w.T, biases are (d,)."""

    w_z: np.ndarray
    w_r: np.ndarray
    w_h: np.ndarray
    u_z: np.ndarray
    u_r: np.ndarray
    u_h: np.ndarray
    b_z: np.ndarray
    b_r: np.ndarray
    b_h: np.ndarray

    @classmethod
    def zeros(cls, d: int) -> "GruCellParams":
        return cls(*(np.zeros((d, d)) for _ in range(6)), *(np.zeros(d) for _ in range(3)))

    @classmethod
    def init(cls, d: int, rng: np.random.Generator) -> "GruCellParams":
        scale = 1.0 / np.sqrt(d)
        mats = [rng.uniform(-scale, scale, size=(d, d)) for _ in range(6)]
        return cls(*mats, *(np.zeros(d) for _ in range(3)))

    def named(self):
        for name in _CELL_PARAM_NAMES:
            yield name, getattr(self, name)


def _cell_parts(params: GruCellParams, x, h_prev):
    """One GRU step on (..., d) arrays; returns gates and the new state."""
    z = sigmoid(x @ params.w_z.T + h_prev @ params.u_z.T + params.b_z)
    r = sigmoid(x @ params.w_r.T + h_prev @ params.u_r.T + params.b_r)
    c = np.tanh(x @ params.w_h.T + (r * h_prev) @ params.u_h.T + params.b_h)
    h = (1.0 - z) * h_prev + z * c
    return z, r, c, h


def gru_cell(x: np.ndarray, h_prev: np.ndarray, params: GruCellParams) -> np.ndarray:
    """Single GRU step; update gate mixes the candidate into the previous state."""
    if not (np.isfinite(x).all() and np.isfinite(h_prev).all()):
        raise NonFinite("gru_cell received non-finite input")
    return _cell_parts(params, x, h_prev)[3]


def encode_avg(tokens: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Mean of the token embeddings."""
    if len(tokens) == 0:
        raise DescriptorEmpty()
    return table[np.asarray(tokens)].mean(axis=0)


def encode_gru(tokens: np.ndarray, table: np.ndarray, cell: GruCellParams) -> np.ndarray:
    """Final hidden state after reading the token embeddings left to right."""
    if len(tokens) == 0:
        raise DescriptorEmpty()
    h = np.zeros(table.shape[1])
    for t in np.asarray(tokens):
        h = gru_cell(table[t], h, cell)
    return h


def encode_bigru_max_res(
    tokens: np.ndarray,
    table: np.ndarray,
    fwd: GruCellParams,
    bwd: GruCellParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Componentwise max over per-position states of both passes plus residuals.

    Returns the embedding and, per dimension, the position index the max came
    from (lowest index wins ties); the indices drive word-importance scores.
    """
    tokens = np.asarray(tokens)
    if len(tokens) == 0:
        raise DescriptorEmpty()
    d = table.shape[1]
    n = len(tokens)
    states = np.empty((n, d))
    h = np.zeros(d)
    for t in range(n):
        h = gru_cell(table[tokens[t]], h, fwd)
        states[t] = h
    h = np.zeros(d)
    for t in range(n - 1, -1, -1):
        h = gru_cell(table[tokens[t]], h, bwd)
        states[t] += h
    states += table[tokens]
    argmax = states.argmax(axis=0)
    return states[argmax, np.arange(d)], argmax


# ---------------------------------------------------------------------------
# Batched kernels


@dataclass
class _PassCache:
    steps: list  # (h_prev, z, r, c) per position
    H: np.ndarray  # (B, L, d) states after masking


@dataclass
class BatchCache:
    kind: EncoderKind
    tokens: np.ndarray  # (B, L)
    mask: np.ndarray    # (B, L) bool
    lengths: np.ndarray
    x: np.ndarray       # (B, L, d) embedded tokens
    out: np.ndarray
    fwd: _PassCache | None = None
    bwd: _PassCache | None = None
    rev_idx: np.ndarray | None = None
    argmax: np.ndarray | None = None  # (B, d) positions, bigru only


@dataclass
class BatchGrads:
    dtokens: np.ndarray  # (B, L, d), zero at padded positions
    cells: dict = field(default_factory=dict)  # direction -> {param name: grad}


def _gru_pass(params: GruCellParams, x: np.ndarray, mask: np.ndarray) -> _PassCache:
    B, L, d = x.shape
    h = np.zeros((B, d))
    steps = []
    H = np.empty((B, L, d))
    for t in range(L):
        z, r, c, h_new = _cell_parts(params, x[:, t], h)
        steps.append((h, z, r, c))
        h = np.where(mask[:, t, None], h_new, h)
        H[:, t] = h
    return _PassCache(steps, H)


def _gru_pass_backward(
    params: GruCellParams,
    x: np.ndarray,
    mask: np.ndarray,
    cache: _PassCache,
    dH: np.ndarray | None,
    dh_final: np.ndarray | None,
):
    B, L, d = x.shape
    dx = np.zeros_like(x)
    grads = {name: np.zeros_like(arr) for name, arr in params.named()}
    dh = np.zeros((B, d)) if dh_final is None else dh_final.copy()
    for t in range(L - 1, -1, -1):
        if dH is not None:
            dh = dh + dH[:, t]
        m = mask[:, t, None]
        h_prev, z, r, c = cache.steps[t]
        dcell = np.where(m, dh, 0.0)
        dskip = np.where(m, 0.0, dh)
        xt = x[:, t]

        dz = dcell * (c - h_prev)
        dc = dcell * z
        dh_prev = dcell * (1.0 - z)

        dpre_c = dc * (1.0 - c * c)
        grads["w_h"] += dpre_c.T @ xt
        grads["u_h"] += dpre_c.T @ (r * h_prev)
        grads["b_h"] += dpre_c.sum(axis=0)
        dxt = dpre_c @ params.w_h
        drh = dpre_c @ params.u_h
        dr = drh * h_prev
        dh_prev += drh * r

        dpre_r = dr * r * (1.0 - r)
        grads["w_r"] += dpre_r.T @ xt
        grads["u_r"] += dpre_r.T @ h_prev
        grads["b_r"] += dpre_r.sum(axis=0)
        dxt += dpre_r @ params.w_r
        dh_prev += dpre_r @ params.u_r

        dpre_z = dz * z * (1.0 - z)
        grads["w_z"] += dpre_z.T @ xt
        grads["u_z"] += dpre_z.T @ h_prev
        grads["b_z"] += dpre_z.sum(axis=0)
        dxt += dpre_z @ params.w_z
        dh_prev += dpre_z @ params.u_z

        dx[:, t] = dxt
        dh = dh_prev + dskip
    return dx, grads


def _reverse_valid(arr: np.ndarray, rev_idx: np.ndarray) -> np.ndarray:
    """Reverse each row's valid prefix (rev_idx is an involution)."""
    if arr.ndim == 3:
        return np.take_along_axis(arr, rev_idx[:, :, None], axis=1)
    return np.take_along_axis(arr, rev_idx, axis=1)


def encode_batch(
    kind: EncoderKind,
    table: np.ndarray,
    cells: dict,
    tokens: np.ndarray,
    lengths: np.ndarray,
) -> BatchCache:
    """Forward pass over a padded (B, L) token matrix."""
    B, L = tokens.shape
    mask = np.arange(L)[None, :] < lengths[:, None]
    x = table[tokens] * mask[:, :, None]
    cache = BatchCache(kind=kind, tokens=tokens, mask=mask, lengths=lengths, x=x, out=None)

    if kind is EncoderKind.AVG:
        cache.out = x.sum(axis=1) / lengths[:, None]
        return cache

    if kind is EncoderKind.GRU:
        cache.fwd = _gru_pass(cells["fwd"], x, mask)
        cache.out = cache.fwd.H[:, -1]
        return cache

    if kind is EncoderKind.BIGRU_MAX_RES:
        positions = np.arange(L)[None, :]
        rev = lengths[:, None] - 1 - positions
        cache.rev_idx = np.where(mask, rev, positions)
        cache.fwd = _gru_pass(cells["fwd"], x, mask)
        x_rev = _reverse_valid(x, cache.rev_idx)
        cache.bwd = _gru_pass(cells["bwd"], x_rev, mask)
        h_all = cache.fwd.H + _reverse_valid(cache.bwd.H, cache.rev_idx) + x
        h_masked = np.where(mask[:, :, None], h_all, -np.inf)
        cache.argmax = h_masked.argmax(axis=1)
        cache.out = np.take_along_axis(h_all, cache.argmax[:, None, :], axis=1)[:, 0]
        return cache

    raise ValueError(f"encode_batch does not handle {kind}")


def backward_batch(cache: BatchCache, cells: dict, upstream: np.ndarray) -> BatchGrads:
    """Gradients of (upstream . out) w.r.t. token embeddings and cell parameters."""
    kind = cache.kind
    mask3 = cache.mask[:, :, None]

    if kind is EncoderKind.AVG:
        dtokens = np.where(mask3, upstream[:, None, :] / cache.lengths[:, None, None], 0.0)
        return BatchGrads(dtokens)

    if kind is EncoderKind.GRU:
        dx, grads = _gru_pass_backward(
            cells["fwd"], cache.x, cache.mask, cache.fwd, dH=None, dh_final=upstream
        )
        return BatchGrads(dx, {"fwd": grads})

    if kind is EncoderKind.BIGRU_MAX_RES:
        B, L, _ = cache.x.shape
        dH = np.zeros_like(cache.x)
        np.put_along_axis(dH, cache.argmax[:, None, :], upstream[:, None, :], axis=1)
        dH = np.where(mask3, dH, 0.0)
        dx_f, grads_f = _gru_pass_backward(
            cells["fwd"], cache.x, cache.mask, cache.fwd, dH=dH, dh_final=None
        )
        dH_rev = _reverse_valid(dH, cache.rev_idx)
        x_rev = _reverse_valid(cache.x, cache.rev_idx)
        dx_b_rev, grads_b = _gru_pass_backward(
            cells["bwd"], x_rev, cache.mask, cache.bwd, dH=dH_rev, dh_final=None
        )
        dtokens = dx_f + _reverse_valid(dx_b_rev, cache.rev_idx) + dH
        return BatchGrads(dtokens, {"fwd": grads_f, "bwd": grads_b})

    raise ValueError(f"backward_batch does not handle {kind}")


# ---------------------------------------------------------------------------
# Model container


@dataclass
class EncoderModel:
    """All trainable state for one encoder kind.

    ``vocab_words`` holds token strings for content encoders and external node
    keys for the lookup kind. ``token_rows`` (content kinds) maps each node to
    its descriptor's rows in the word tables; call :meth:`bind` after loading
    a model from disk to attach it to a graph.
    """

    kind: EncoderKind
    dim: int
    vocab_words: list[str]
    focus_table: np.ndarray
    context_table: np.ndarray
    focus_cells: dict = field(default_factory=dict)    # direction -> GruCellParams
    context_cells: dict = field(default_factory=dict)
    token_rows: list | None = None
    forward_cache: dict = field(default_factory=dict, repr=False)

    def table(self, side: str) -> np.ndarray:
        return self.focus_table if side == FOCUS else self.context_table

    def cells(self, side: str) -> dict:
        return self.focus_cells if side == FOCUS else self.context_cells

    def parameters(self) -> dict[str, np.ndarray]:
        """Canonical name -> tensor map; iteration order fixes the file layout."""
        params = {"focus_table": self.focus_table}
        for direction in self.kind.cell_directions:
            for name, arr in self.focus_cells[direction].named():
                params[f"focus_{direction}.{name}"] = arr
        params["context_table"] = self.context_table
        for direction in self.kind.cell_directions:
            for name, arr in self.context_cells[direction].named():
                params[f"context_{direction}.{name}"] = arr
        return params

    def bind(self, g: Graph):
        """Attach a graph: map every node descriptor into this model's vocabulary."""
        if self.kind is EncoderKind.LOOKUP:
            if list(g.keys) != self.vocab_words:
                raise ValueError(
                    "lookup model was trained on a different node set than this graph"
                )
            self.token_rows = None
            return self
        index = {w: i for i, w in enumerate(self.vocab_words)}
        rows = []
        for v in range(g.node_count):
            try:
                rows.append(
                    np.array([index[w] for w in g.descriptor_tokens(v)], dtype=np.int64)
                )
            except KeyError as exc:
                raise ValueError(
                    f"descriptor word {exc.args[0]!r} of node {g.keys[v]!r} "
                    "is not in the model vocabulary"
                ) from None
        self.token_rows = rows
        return self


def init_model(g: Graph, kind: EncoderKind, dim: int, seed: int) -> EncoderModel:
    """Fresh model: tables uniform in [-0.5/d, 0.5/d], GRU weights in
    [-1/sqrt(d), 1/sqrt(d)], biases zero."""
    kind = EncoderKind(kind)
    rows = g.node_count if kind is EncoderKind.LOOKUP else g.vocab.size
    words = list(g.keys) if kind is EncoderKind.LOOKUP else list(g.vocab.words)
    bound = 0.5 / dim

    def make_cells(side_tag: int) -> dict:
        cells = {}
        for j, direction in enumerate(kind.cell_directions):
            rng = np.random.default_rng(np.random.SeedSequence([seed, 20 + side_tag * 4 + j]))
            cells[direction] = GruCellParams.init(dim, rng)
        return cells

    rng_f = np.random.default_rng(np.random.SeedSequence([seed, 10]))
    rng_c = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    model = EncoderModel(
        kind=kind,
        dim=dim,
        vocab_words=words,
        focus_table=rng_f.uniform(-bound, bound, size=(rows, dim)),
        context_table=rng_c.uniform(-bound, bound, size=(rows, dim)),
        focus_cells=make_cells(0),
        context_cells=make_cells(1),
    )
    return model.bind(g)


@dataclass
class EncoderGradients:
    """Sparse gradient of one backward pass: touched table rows plus cell grads."""

    table_rows: dict  # row index -> (d,) gradient
    cells: dict       # direction -> {param name: gradient array}


def node_embedding(model: EncoderModel, v: int, side: str) -> np.ndarray:
    """Embedding of node v on the given side; caches state for encoder_backward."""
    if model.kind is EncoderKind.LOOKUP:
        model.forward_cache[(v, side)] = "lookup"
        return model.table(side)[v].copy()
    tokens = model.token_rows[v]
    cache = encode_batch(
        model.kind,
        model.table(side),
        model.cells(side),
        tokens[None, :],
        np.array([len(tokens)]),
    )
    model.forward_cache[(v, side)] = cache
    return cache.out[0]


def encoder_backward(model: EncoderModel, v: int, side: str, upstream: np.ndarray) -> EncoderGradients:
    """Exact gradients of (upstream . node_embedding(v, side)) for that side's parameters.

    Consumes the cached forward pass; calling twice without a fresh forward
    raises StaleBackward.
    """
    cache = model.forward_cache.pop((v, side), None)
    if cache is None:
        raise StaleBackward(v, side)
    if model.kind is EncoderKind.LOOKUP:
        return EncoderGradients({v: np.asarray(upstream, dtype=float).copy()}, {})
    grads = backward_batch(cache, model.cells(side), np.asarray(upstream, dtype=float)[None, :])
    rows: dict[int, np.ndarray] = {}
    tokens = cache.tokens[0]
    for t in range(int(cache.lengths[0])):
        row = int(tokens[t])
        if row in rows:
            rows[row] = rows[row] + grads.dtokens[0, t]
        else:
            rows[row] = grads.dtokens[0, t].copy()
    return EncoderGradients(rows, grads.cells)
