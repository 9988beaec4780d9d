"""Versioned binary model files.

Layout (all integers little-endian uint32, floats little-endian float64):

    magic "TXWK" | version | kind tag | d | rows
    rows x (byte length, UTF-8 word)        vocabulary (node keys for lookup)
    parameter tensors, row-major, in EncoderModel.parameters() order
    (focus side first, then context side)
"""

from __future__ import annotations

import struct

import numpy as np

from ._util import atomic_write_bytes
from .encoders import EncoderKind, EncoderModel, GruCellParams

MAGIC = b"TXWK"
FORMAT_VERSION = 1

_KIND_TAGS = {
    EncoderKind.LOOKUP: 0,
    EncoderKind.AVG: 1,
    EncoderKind.GRU: 2,
    EncoderKind.BIGRU_MAX_RES: 3,
}
_TAG_KINDS = {v: k for k, v in _KIND_TAGS.items()}


def save_model(model: EncoderModel, path):
    parts = [MAGIC]
    parts.append(struct.pack("<III", FORMAT_VERSION, _KIND_TAGS[model.kind], model.dim))
    parts.append(struct.pack("<I", len(model.vocab_words)))
    for word in model.vocab_words:
        raw = word.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    for _, tensor in model.parameters().items():
        parts.append(np.ascontiguousarray(tensor, dtype="<f8").tobytes())
    atomic_write_bytes(path, b"".join(parts))


class ModelFormatError(ValueError):
    pass


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFormatError("model file truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def tensor(self, shape) -> np.ndarray:
        count = int(np.prod(shape))
        arr = np.frombuffer(self.take(count * 8), dtype="<f8").astype(np.float64)
        return arr.reshape(shape)


def load_model(path) -> EncoderModel:
    """Read a model; call .bind(graph) before encoding nodes with it."""
    with open(path, "rb") as fh:
        reader = _Reader(fh.read())
    if reader.take(4) != MAGIC:
        raise ModelFormatError("not a textwalk model file (bad magic)")
    version = reader.u32()
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    tag = reader.u32()
    if tag not in _TAG_KINDS:
        raise ModelFormatError(f"unknown encoder kind tag {tag}")
    kind = _TAG_KINDS[tag]
    d = reader.u32()
    rows = reader.u32()
    words = [reader.take(reader.u32()).decode("utf-8") for _ in range(rows)]

    def read_cells() -> dict:
        cells = {}
        for direction in kind.cell_directions:
            tensors = [reader.tensor((d, d)) for _ in range(6)]
            biases = [reader.tensor((d,)) for _ in range(3)]
            cells[direction] = GruCellParams(*tensors, *biases)
        return cells

    focus_table = reader.tensor((rows, d))
    focus_cells = read_cells()
    context_table = reader.tensor((rows, d))
    context_cells = read_cells()
    if reader.pos != len(reader.data):
        raise ModelFormatError("trailing bytes after model payload")
    return EncoderModel(
        kind=kind,
        dim=d,
        vocab_words=words,
        focus_table=focus_table,
        context_table=context_table,
        focus_cells=focus_cells,
        context_cells=context_cells,
    )
