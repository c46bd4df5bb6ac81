"""Flat binary model format.

Layout: magic "IDXF", format version (u16 LE), model type (u16 LE, 0 = lstm,
1 = cnn_lstm), then five u32 LE header fields (hidden size, input features,
kernel count, kernel width, pool width; the conv fields are zero for a plain
LSTM), then every parameter array as little-endian float64 in canonical
order: conv kernels, conv bias (cnn_lstm only), then the LstmParams fields.
Round-trips are bit-exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .conv import ConvParams
from .lstm import LstmParams
from .models import CnnLstmModel, LstmModel, Model

MAGIC = b"IDXF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHIIIII")
_MODEL_CODES = {"lstm": 0, "cnn_lstm": 1}


def save_model(model: Model, path: str | Path) -> None:
    if isinstance(model, LstmModel):
        code = _MODEL_CODES["lstm"]
        hidden = model.params.hidden_size
        features = model.params.input_size
        kernels = width = pool = 0
        arrays = model.params.arrays()
    elif isinstance(model, CnnLstmModel):
        code = _MODEL_CODES["cnn_lstm"]
        hidden = model.lstm.hidden_size
        features = model.conv.input_size
        kernels = model.conv.n_kernels
        width = model.conv.width
        pool = model.conv.pool_width
        arrays = model.arrays()
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, code, hidden, features, kernels, width, pool)
    with Path(path).open("wb") as handle:
        handle.write(header)
        for array in arrays:
            handle.write(np.ascontiguousarray(array, dtype="<f8").tobytes())


def _lstm_shapes(input_size: int, hidden: int) -> list[tuple[int, ...]]:
    shapes: list[tuple[int, ...]] = []
    for _ in range(4):
        shapes.extend([(input_size, hidden), (hidden, hidden), (hidden,)])
    shapes.extend([(hidden,), (1,)])
    return shapes


def load_model(path: str | Path) -> Model:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise ValueError(f"{path}: file too short for a model header")
    magic, version, code, hidden, features, kernels, width, pool = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")

    offset = _HEADER.size

    def take(shape: tuple[int, ...]) -> np.ndarray:
        nonlocal offset
        count = int(np.prod(shape))
        array = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        offset += count * 8
        return array.reshape(shape).astype(float)

    if code == _MODEL_CODES["lstm"]:
        arrays = [take(shape) for shape in _lstm_shapes(features, hidden)]
        model: Model = LstmModel(LstmParams(*arrays))
    elif code == _MODEL_CODES["cnn_lstm"]:
        conv = ConvParams(
            kernels=take((kernels, width, features)),
            bias=take((kernels,)),
            pool_width=pool,
        )
        arrays = [take(shape) for shape in _lstm_shapes(kernels, hidden)]
        model = CnnLstmModel(conv, LstmParams(*arrays))
    else:
        raise ValueError(f"{path}: unknown model type code {code}")
    if offset != len(blob):
        raise ValueError(f"{path}: trailing bytes after parameters")
    return model
