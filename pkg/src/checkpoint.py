# src/checkpoint.py
"""
Flat little-endian binary records for layer checkpoints and statistic sequences.

Layer record:
    b"BWL1" | kind u8 | estimation object u8 | recovery u8 | finalized u8
    | d u32 | g u32 | T u32 | steps u64 | λ f64 | ε f64
    | running mean (d) | running stats (d/g blocks of g×g)
    | γ, β (d each) or W_color (d×d), b (d) | finalized blocks when flagged
Sequence record:
    b"BWS1" | name length u32 | name utf-8 | count u32 | rows u32 | cols u32 | matrices
"""
import logging
import struct
from pathlib import Path

import numpy as np

from bw_layer import LayerState, Mode
from errors import ParseError, ValidationError
from transforms import EstimationObject, Recovery, TransformKind, WhiteningSpec

logger = logging.getLogger(__name__)

LAYER_MAGIC = b"BWL1"
SEQUENCE_MAGIC = b"BWS1"
_LAYER_HEADER = struct.Struct("<4sBBBBIIIQdd")
_SEQUENCE_HEADER = struct.Struct("<4sI")
_SEQUENCE_SHAPE = struct.Struct("<III")

_KINDS = list(TransformKind)
_OBJECTS = list(EstimationObject)
_RECOVERIES = list(Recovery)


def _as_le(values):
    return np.ascontiguousarray(values, dtype="<f8").tobytes()


def encode_layer_state(state):
    spec = state.spec
    g = state.group_size
    finalized = state.finalized_w is not None
    parts = [
        _LAYER_HEADER.pack(
            LAYER_MAGIC,
            _KINDS.index(spec.kind),
            _OBJECTS.index(spec.estimation_object),
            _RECOVERIES.index(spec.recovery),
            int(finalized),
            state.dim,
            g,
            spec.itn_iterations,
            state.steps,
            spec.momentum,
            spec.epsilon,
        ),
        _as_le(state.running_mean),
    ]
    parts.extend(_as_le(stat) for stat in state.running_stat)
    for values in state.parameters().values():
        parts.append(_as_le(values))
    if finalized:
        parts.extend(_as_le(w) for w in state.finalized_w)
    return b"".join(parts)


class _Reader:
    def __init__(self, payload):
        self.payload = payload
        self.offset = 0

    def floats(self, count, shape=None):
        size = 8 * count
        if self.offset + size > len(self.payload):
            raise ParseError(f"record truncated: need {size} bytes", self.offset)
        values = np.frombuffer(self.payload, dtype="<f8", count=count, offset=self.offset).astype(np.float64)
        self.offset += size
        return values.reshape(shape) if shape else values


def decode_layer_state(payload, eig_solver="jacobi"):
    """
    Rebuilds a LayerState from `encode_layer_state` bytes.

    Raises:
        ParseError: bad magic, unknown enum codes or truncated payload.
    """
    if len(payload) < _LAYER_HEADER.size:
        raise ParseError("record shorter than the layer header", len(payload))
    (magic, kind, obj, recovery, finalized, dim, g, iterations, steps, momentum, epsilon) = _LAYER_HEADER.unpack_from(
        payload
    )
    if magic != LAYER_MAGIC:
        raise ParseError(f"bad magic {magic!r}", 0)
    if kind >= len(_KINDS) or obj >= len(_OBJECTS) or recovery >= len(_RECOVERIES):
        raise ParseError("unknown enum code in layer header", 4)
    if g == 0 or dim % g != 0:
        raise ParseError(f"group size {g} does not divide dimension {dim}", 12)
    spec = WhiteningSpec(
        kind=_KINDS[kind],
        group_size=None if g == dim else g,
        epsilon=epsilon,
        itn_iterations=iterations,
        estimation_object=_OBJECTS[obj],
        recovery=_RECOVERIES[recovery],
        momentum=momentum,
        eig_solver=eig_solver,
    )
    reader = _Reader(payload)
    reader.offset = _LAYER_HEADER.size
    state = LayerState.create(dim, spec)
    state.steps = steps
    state.running_mean = reader.floats(dim)
    state.running_stat = [reader.floats(g * g, (g, g)) for _ in range(dim // g)]
    if spec.recovery is Recovery.SCALE_SHIFT:
        state.gamma = reader.floats(dim)
        state.beta = reader.floats(dim)
    else:
        state.color_w = reader.floats(dim * dim, (dim, dim))
        state.color_b = reader.floats(dim)
    if finalized:
        state.finalized_w = [reader.floats(g * g, (g, g)) for _ in range(dim // g)]
        state.mode = Mode.INFERENCE
    if reader.offset != len(payload):
        raise ParseError(f"{len(payload) - reader.offset} trailing bytes after layer record", reader.offset)
    return state


def save_layer_state(path, state):
    path = Path(path)
    path.write_bytes(encode_layer_state(state))
    logger.debug("Wrote layer checkpoint %s", path)
    return path


def load_layer_state(path, eig_solver="jacobi"):
    return decode_layer_state(Path(path).read_bytes(), eig_solver=eig_solver)


# --- Statistic sequences ---

def save_sequence(path, name, matrices):
    """Writes a list of equally shaped matrices under a sequence header."""
    path = Path(path)
    encoded = name.encode("utf-8")
    stacked = np.asarray(matrices, dtype=np.float64)
    if stacked.size == 0:
        stacked = np.zeros((0, 0, 0))
    if stacked.ndim != 3:
        raise ValidationError(f"sequence {name!r} must be a list of 2-D matrices, got shape {stacked.shape}")
    count, rows, cols = stacked.shape
    payload = b"".join(
        [
            _SEQUENCE_HEADER.pack(SEQUENCE_MAGIC, len(encoded)),
            encoded,
            _SEQUENCE_SHAPE.pack(count, rows, cols),
            _as_le(stacked),
        ]
    )
    path.write_bytes(payload)
    return path


def load_sequence(path):
    """Returns (name, list of matrices) from a `save_sequence` file."""
    payload = Path(path).read_bytes()
    if len(payload) < _SEQUENCE_HEADER.size:
        raise ParseError("record shorter than the sequence header", len(payload))
    magic, name_length = _SEQUENCE_HEADER.unpack_from(payload)
    if magic != SEQUENCE_MAGIC:
        raise ParseError(f"bad magic {magic!r}", 0)
    offset = _SEQUENCE_HEADER.size
    try:
        name = payload[offset:offset + name_length].decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"sequence name is not UTF-8: {e.reason}", offset + e.start) from e
    offset += name_length
    if offset + _SEQUENCE_SHAPE.size > len(payload):
        raise ParseError("sequence shape header truncated", offset)
    count, rows, cols = _SEQUENCE_SHAPE.unpack_from(payload, offset)
    reader = _Reader(payload)
    reader.offset = offset + _SEQUENCE_SHAPE.size
    matrices = [reader.floats(rows * cols, (rows, cols)) for _ in range(count)]
    if reader.offset != len(payload):
        raise ParseError(f"{len(payload) - reader.offset} trailing bytes after sequence record", reader.offset)
    return name, matrices
