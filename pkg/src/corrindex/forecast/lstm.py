"""Gated recurrent core: parameters, batched forward pass, and exact BPTT.

Everything is plain numpy. The forward pass keeps per-step activations so the
backward pass can run the standard truncation-free backpropagation through
time. Shapes are batch-major: inputs are (batch, steps, features).
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


@dataclass
class LstmParams:
    """Input / recurrent weights and biases for the four gates, plus the readout.

    Field order is the canonical flat parameter order used by the optimizer
    and the serializer. wx_* are (features, hidden), wh_* are (hidden,
    hidden), b_* are (hidden,); the dense readout maps the final hidden state
    to one scalar.
    """

    wx_i: np.ndarray
    wh_i: np.ndarray
    b_i: np.ndarray
    wx_f: np.ndarray
    wh_f: np.ndarray
    b_f: np.ndarray
    wx_g: np.ndarray
    wh_g: np.ndarray
    b_g: np.ndarray
    wx_o: np.ndarray
    wh_o: np.ndarray
    b_o: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray

    def __post_init__(self):
        f, h = self.wx_i.shape
        for name in ("wx_i", "wx_f", "wx_g", "wx_o"):
            if getattr(self, name).shape != (f, h):
                raise ValueError(f"{name} shape mismatch")
        for name in ("wh_i", "wh_f", "wh_g", "wh_o"):
            if getattr(self, name).shape != (h, h):
                raise ValueError(f"{name} shape mismatch")
        for name in ("b_i", "b_f", "b_g", "b_o", "w_out"):
            if getattr(self, name).shape != (h,):
                raise ValueError(f"{name} shape mismatch")
        if self.b_out.shape != (1,):
            raise ValueError("b_out must have shape (1,)")
        if not all(np.all(np.isfinite(a)) for a in self.arrays()):
            raise ValueError("parameters contain non-finite values")

    @property
    def input_size(self) -> int:
        return self.wx_i.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.wx_i.shape[1]

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, f.name) for f in fields(self)]

    @classmethod
    def init(cls, input_size: int, hidden_size: int, rng: np.random.Generator) -> "LstmParams":
        """Seeded uniform init in +-1/sqrt(fan_in) per array."""

        def uniform(shape: Sequence[int], fan_in: int) -> np.ndarray:
            bound = 1.0 / np.sqrt(max(1, fan_in))
            return rng.uniform(-bound, bound, size=shape)

        kwargs = {}
        for gate in ("i", "f", "g", "o"):
            kwargs[f"wx_{gate}"] = uniform((input_size, hidden_size), input_size)
            kwargs[f"wh_{gate}"] = uniform((hidden_size, hidden_size), hidden_size)
            kwargs[f"b_{gate}"] = uniform((hidden_size,), hidden_size)
        kwargs["w_out"] = uniform((hidden_size,), hidden_size)
        kwargs["b_out"] = uniform((1,), hidden_size)
        return cls(**kwargs)


def lstm_forward_batch(p: LstmParams, x: np.ndarray) -> tuple[np.ndarray, dict]:
    """Run the recurrence over a (batch, steps, features) tensor.

    Hidden and cell states start at zero. The prediction is the dense readout
    of the final hidden state. Returns (predictions, cache) where the cache
    holds everything the backward pass needs.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 3 or x.shape[2] != p.input_size:
        raise ValueError(
            f"input shape {x.shape} incompatible with input size {p.input_size}"
        )
    batch, steps, _ = x.shape
    h = np.zeros((batch, p.hidden_size))
    c = np.zeros((batch, p.hidden_size))
    step_cache = []
    for t in range(steps):
        x_t = x[:, t, :]
        gate_i = sigmoid(x_t @ p.wx_i + h @ p.wh_i + p.b_i)
        gate_f = sigmoid(x_t @ p.wx_f + h @ p.wh_f + p.b_f)
        gate_g = np.tanh(x_t @ p.wx_g + h @ p.wh_g + p.b_g)
        gate_o = sigmoid(x_t @ p.wx_o + h @ p.wh_o + p.b_o)
        c_next = gate_f * c + gate_i * gate_g
        tanh_c = np.tanh(c_next)
        h_next = gate_o * tanh_c
        step_cache.append((x_t, h, c, gate_i, gate_f, gate_g, gate_o, tanh_c))
        h, c = h_next, c_next
    pred = h @ p.w_out + p.b_out[0]
    return pred, {"steps": step_cache, "h_final": h, "input_shape": x.shape}


def lstm_backward_batch(
    p: LstmParams, cache: dict, dpred: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray]:
    """Exact gradients of a scalar loss given d(loss)/d(prediction).

    Returns (gradients in LstmParams field order, d(loss)/d(input)).
    """
    steps = cache["steps"]
    h_final = cache["h_final"]
    dpred = np.asarray(dpred, dtype=float)

    grads = {f.name: np.zeros_like(getattr(p, f.name)) for f in fields(p)}
    grads["w_out"] = h_final.T @ dpred
    grads["b_out"] = np.array([dpred.sum()])

    dh = np.outer(dpred, p.w_out)
    dc = np.zeros_like(dh)
    dx = np.zeros(cache["input_shape"])
    for t in range(len(steps) - 1, -1, -1):
        x_t, h_prev, c_prev, gate_i, gate_f, gate_g, gate_o, tanh_c = steps[t]
        d_o = dh * tanh_c
        da_o = d_o * gate_o * (1.0 - gate_o)
        dc = dc + dh * gate_o * (1.0 - tanh_c**2)
        da_i = (dc * gate_g) * gate_i * (1.0 - gate_i)
        da_f = (dc * c_prev) * gate_f * (1.0 - gate_f)
        da_g = (dc * gate_i) * (1.0 - gate_g**2)

        for gate, da in (("i", da_i), ("f", da_f), ("g", da_g), ("o", da_o)):
            grads[f"wx_{gate}"] += x_t.T @ da
            grads[f"wh_{gate}"] += h_prev.T @ da
            grads[f"b_{gate}"] += da.sum(axis=0)

        dx[:, t, :] = da_i @ p.wx_i.T + da_f @ p.wx_f.T + da_g @ p.wx_g.T + da_o @ p.wx_o.T
        dh = da_i @ p.wh_i.T + da_f @ p.wh_f.T + da_g @ p.wh_g.T + da_o @ p.wh_o.T
        dc = dc * gate_f
    return [grads[f.name] for f in fields(p)], dx
