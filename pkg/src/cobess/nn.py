"""Minimal neural-network core: dense + LSTM layers, BPTT, Adam.

Everything is 64-bit numpy, sized for small fully-connected -> LSTM ->
fully-connected stacks.  Forward passes are batched over a leading batch
axis; backward passes return exact gradients, which the test suite checks
against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DefectError, TrainingError, ValidationError

CHECKPOINT_VERSION = 1

_ACTIVATIONS = ("linear", "relu")


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "linear":
        return z
    if name == "relu":
        return np.maximum(z, 0.0)
    raise ValidationError(f"unknown activation '{name}'")


def _activate_grad(name: str, z: np.ndarray, dy: np.ndarray) -> np.ndarray:
    if name == "linear":
        return dy
    if name == "relu":
        return dy * (z > 0.0)
    raise ValidationError(f"unknown activation '{name}'")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class DenseLayer:
    """Affine map plus an element-wise activation."""

    def __init__(self, weights: np.ndarray, bias: np.ndarray,
                 activation: str = "linear"):
        weights = np.asarray(weights, dtype=float)
        bias = np.asarray(bias, dtype=float)
        if weights.ndim != 2 or bias.shape != (weights.shape[0],):
            raise DefectError(
                f"inconsistent dense shapes {weights.shape} / {bias.shape}")
        if not (np.isfinite(weights).all() and np.isfinite(bias).all()):
            raise DefectError("dense parameters must be finite")
        if activation not in _ACTIVATIONS:
            raise ValidationError(f"unknown activation '{activation}'")
        self.weights = weights
        self.bias = bias
        self.activation = activation

    @classmethod
    def create(cls, rng: np.random.Generator, n_in: int, n_out: int,
               activation: str = "linear") -> "DenseLayer":
        limit = 1.0 / np.sqrt(n_in)
        weights = rng.uniform(-limit, limit, size=(n_out, n_in))
        return cls(weights, np.zeros(n_out), activation)

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n_in:
            raise DefectError(
                f"dense expected input width {self.n_in}, got {x.shape}")
        return _activate(self.activation, x @ self.weights.T + self.bias)


class LstmLayer:
    """Single LSTM cell; gate weights stacked (input, forget, output, candidate)."""

    def __init__(self, w_x: np.ndarray, w_h: np.ndarray, b: np.ndarray):
        w_x = np.asarray(w_x, dtype=float)
        w_h = np.asarray(w_h, dtype=float)
        b = np.asarray(b, dtype=float)
        if w_x.ndim != 2 or w_x.shape[0] % 4 != 0:
            raise DefectError(f"bad LSTM input-weight shape {w_x.shape}")
        n_hidden = w_x.shape[0] // 4
        if w_h.shape != (4 * n_hidden, n_hidden) or b.shape != (4 * n_hidden,):
            raise DefectError(
                f"inconsistent LSTM shapes {w_x.shape} / {w_h.shape} / {b.shape}")
        if not all(np.isfinite(a).all() for a in (w_x, w_h, b)):
            raise DefectError("LSTM parameters must be finite")
        self.w_x = w_x
        self.w_h = w_h
        self.b = b

    @classmethod
    def create(cls, rng: np.random.Generator, n_in: int, n_hidden: int,
               forget_bias: float = 1.0) -> "LstmLayer":
        w_x = rng.uniform(-1, 1, size=(4 * n_hidden, n_in)) / np.sqrt(n_in)
        w_h = rng.uniform(-1, 1, size=(4 * n_hidden, n_hidden)) / np.sqrt(n_hidden)
        b = np.zeros(4 * n_hidden)
        b[n_hidden:2 * n_hidden] = forget_bias
        return cls(w_x, w_h, b)

    @property
    def n_in(self) -> int:
        return self.w_x.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.w_x.shape[0] // 4

    def step(self, x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray
             ) -> tuple[np.ndarray, np.ndarray, dict]:
        """One recurrence step; returns (h, c, cache for backprop)."""
        nh = self.n_hidden
        if x.shape[-1] != self.n_in or h_prev.shape[-1] != nh or c_prev.shape[-1] != nh:
            raise DefectError(
                f"LSTM step shapes {x.shape}/{h_prev.shape}/{c_prev.shape} "
                f"do not match (n_in={self.n_in}, n_hidden={nh})")
        pre = x @ self.w_x.T + h_prev @ self.w_h.T + self.b
        i = _sigmoid(pre[..., :nh])
        f = _sigmoid(pre[..., nh:2 * nh])
        o = _sigmoid(pre[..., 2 * nh:3 * nh])
        g = np.tanh(pre[..., 3 * nh:])
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        cache = {"x": x, "h_prev": h_prev, "c_prev": c_prev,
                 "i": i, "f": f, "o": o, "g": g, "c": c, "tc": tc}
        return h, c, cache

    def backward_step(self, cache: dict, dh: np.ndarray, dc: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict]:
        """Backprop one step; returns (dx, dh_prev, dc_prev, parameter grads)."""
        i, f, o, g = cache["i"], cache["f"], cache["o"], cache["g"]
        tc = cache["tc"]
        dc_total = dc + dh * o * (1.0 - tc * tc)
        d_pre = np.concatenate([
            dc_total * g * i * (1.0 - i),
            dc_total * cache["c_prev"] * f * (1.0 - f),
            dh * tc * o * (1.0 - o),
            dc_total * i * (1.0 - g * g),
        ], axis=-1)
        grads = {"w_x": d_pre.T @ cache["x"],
                 "w_h": d_pre.T @ cache["h_prev"],
                 "b": d_pre.sum(axis=0)}
        dx = d_pre @ self.w_x
        dh_prev = d_pre @ self.w_h
        dc_prev = dc_total * f
        return dx, dh_prev, dc_prev, grads


def dense_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    return layer.forward(x)


def lstm_forward(layer: LstmLayer, x: np.ndarray, h_prev: np.ndarray,
                 c_prev: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One LSTM step returning (output, h_next, c_next); output is h_next."""
    h, c, _ = layer.step(np.atleast_2d(x), np.atleast_2d(h_prev),
                         np.atleast_2d(c_prev))
    if np.ndim(x) == 1:
        return h[0], h[0], c[0]
    return h, h, c


class RecurrentNetwork:
    """dense -> LSTM -> dense stack over observation sequences."""

    def __init__(self, dense_in: DenseLayer, lstm: LstmLayer,
                 dense_out: DenseLayer):
        if dense_in.n_out != lstm.n_in or lstm.n_hidden != dense_out.n_in:
            raise DefectError("layer widths do not chain")
        self.dense_in = dense_in
        self.lstm = lstm
        self.dense_out = dense_out

    @classmethod
    def create(cls, rng: np.random.Generator, n_in: int, n_hidden: int,
               n_out: int, hidden_activation: str = "relu",
               forget_bias: float = 1.0) -> "RecurrentNetwork":
        return cls(DenseLayer.create(rng, n_in, n_hidden, hidden_activation),
                   LstmLayer.create(rng, n_hidden, n_hidden, forget_bias),
                   DenseLayer.create(rng, n_hidden, n_out, "linear"))

    @property
    def n_in(self) -> int:
        return self.dense_in.n_in

    @property
    def n_hidden(self) -> int:
        return self.lstm.n_hidden

    @property
    def n_out(self) -> int:
        return self.dense_out.n_out

    def parameters(self) -> dict[str, np.ndarray]:
        """Live parameter arrays keyed by a stable flat name."""
        return {"dense_in.w": self.dense_in.weights,
                "dense_in.b": self.dense_in.bias,
                "lstm.w_x": self.lstm.w_x,
                "lstm.w_h": self.lstm.w_h,
                "lstm.b": self.lstm.b,
                "dense_out.w": self.dense_out.weights,
                "dense_out.b": self.dense_out.bias}

    def load_parameters(self, params: dict[str, np.ndarray]) -> None:
        """Copy values into this network's arrays (shapes must match)."""
        own = self.parameters()
        if set(params) != set(own):
            raise DefectError(f"parameter keys {sorted(params)} do not match")
        for name, arr in own.items():
            src = np.asarray(params[name], dtype=float)
            if src.shape != arr.shape:
                raise DefectError(
                    f"parameter '{name}' has shape {src.shape}, expected {arr.shape}")
            arr[...] = src

    def copy(self) -> "RecurrentNetwork":
        return RecurrentNetwork(
            DenseLayer(self.dense_in.weights.copy(), self.dense_in.bias.copy(),
                       self.dense_in.activation),
            LstmLayer(self.lstm.w_x.copy(), self.lstm.w_h.copy(),
                      self.lstm.b.copy()),
            DenseLayer(self.dense_out.weights.copy(), self.dense_out.bias.copy(),
                       self.dense_out.activation))

    def initial_state(self, batch: int = 1) -> tuple[np.ndarray, np.ndarray]:
        return (np.zeros((batch, self.n_hidden)),
                np.zeros((batch, self.n_hidden)))

    def step(self, x: np.ndarray, h: np.ndarray, c: np.ndarray
             ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Single-step forward without caching (for acting)."""
        a1 = self.dense_in.forward(x)
        h, c, _ = self.lstm.step(a1, h, c)
        return self.dense_out.forward(h), h, c

    def forward_sequence(self, xs: np.ndarray, h0: np.ndarray | None = None,
                         c0: np.ndarray | None = None
                         ) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray], list]:
        """Run a (batch, time, n_in) sequence; returns (ys, (h, c), cache)."""
        xs = np.asarray(xs, dtype=float)
        if xs.ndim != 3 or xs.shape[2] != self.n_in:
            raise DefectError(
                f"expected (batch, time, {self.n_in}) input, got {xs.shape}")
        batch, n_steps, _ = xs.shape
        if h0 is None or c0 is None:
            h, c = self.initial_state(batch)
        else:
            h, c = h0, c0
        ys = np.empty((batch, n_steps, self.n_out))
        caches = []
        for t in range(n_steps):
            x_t = xs[:, t, :]
            z1 = x_t @ self.dense_in.weights.T + self.dense_in.bias
            a1 = _activate(self.dense_in.activation, z1)
            h, c, lstm_cache = self.lstm.step(a1, h, c)
            ys[:, t, :] = h @ self.dense_out.weights.T + self.dense_out.bias
            caches.append({"x": x_t, "z1": z1, "h": h, "lstm": lstm_cache})
        if not np.isfinite(ys).all():
            raise TrainingError("non-finite network output")
        return ys, (h, c), caches

    def backward_sequence(self, caches: list, d_ys: np.ndarray
                          ) -> dict[str, np.ndarray]:
        """Exact gradients of sum(d_ys * ys) w.r.t. every parameter."""
        if not caches:
            raise DefectError("backward requires the forward cache")
        d_ys = np.asarray(d_ys, dtype=float)
        batch = caches[0]["x"].shape[0]
        if d_ys.shape != (batch, len(caches), self.n_out):
            raise DefectError(
                f"upstream gradient shape {d_ys.shape} does not match forward "
                f"cache ({batch}, {len(caches)}, {self.n_out})")
        grads = {name: np.zeros_like(arr) for name, arr in self.parameters().items()}
        dh = np.zeros((batch, self.n_hidden))
        dc = np.zeros((batch, self.n_hidden))
        for t in range(len(caches) - 1, -1, -1):
            cache = caches[t]
            dy = d_ys[:, t, :]
            grads["dense_out.w"] += dy.T @ cache["h"]
            grads["dense_out.b"] += dy.sum(axis=0)
            dh = dh + dy @ self.dense_out.weights
            da1, dh, dc, lstm_grads = self.lstm.backward_step(cache["lstm"], dh, dc)
            for key, val in lstm_grads.items():
                grads[f"lstm.{key}"] += val
            dz1 = _activate_grad(self.dense_in.activation, cache["z1"], da1)
            grads["dense_in.w"] += dz1.T @ cache["x"]
            grads["dense_in.b"] += dz1.sum(axis=0)
        return grads


@dataclass
class AdamState:
    """Adam moment accumulators; shapes mirror the parameter dict."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_parameters(cls, params: dict[str, np.ndarray], learning_rate: float,
                       **kwargs) -> "AdamState":
        state = cls(learning_rate=learning_rate, **kwargs)
        state.m = {k: np.zeros_like(p) for k, p in params.items()}
        state.v = {k: np.zeros_like(p) for k, p in params.items()}
        return state


def adam_step(adam: AdamState, params: dict[str, np.ndarray],
              grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Standard bias-corrected Adam update, applied in place."""
    if set(grads) != set(params):
        raise DefectError("gradient keys do not match parameter keys")
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise TrainingError(f"non-finite gradient for '{name}'")
    adam.step_count += 1
    t = adam.step_count
    bc1 = 1.0 - adam.beta1 ** t
    bc2 = 1.0 - adam.beta2 ** t
    for name, p in params.items():
        g = grads[name]
        m = adam.m[name]
        v = adam.v[name]
        m *= adam.beta1
        m += (1.0 - adam.beta1) * g
        v *= adam.beta2
        v += (1.0 - adam.beta2) * g * g
        p -= adam.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + adam.epsilon)
    return params


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float
                   ) -> tuple[dict[str, np.ndarray], float]:
    """Scale gradients so their global L2 norm is at most max_norm."""
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / total
        grads = {k: g * scale for k, g in grads.items()}
    return grads, total


def save_network(path: str | Path, network: RecurrentNetwork,
                 extra: dict | None = None) -> None:
    """Write a versioned checkpoint (npz); round-trips bitwise.

    Layout: 'format_version' (int), 'hidden_activation' (str), one array per
    parameter under its flat name, and caller metadata under 'extra.<key>'.
    """
    payload: dict = {"format_version": np.int64(CHECKPOINT_VERSION),
                     "hidden_activation": np.str_(network.dense_in.activation)}
    payload.update(network.parameters())
    for key, value in (extra or {}).items():
        payload[f"extra.{key}"] = value
    np.savez(path, **payload)


def load_network(path: str | Path) -> tuple[RecurrentNetwork, dict]:
    """Read a checkpoint written by save_network; returns (network, extra)."""
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != CHECKPOINT_VERSION:
            raise ValidationError(
                f"unsupported checkpoint version {version} "
                f"(expected {CHECKPOINT_VERSION})")
        activation = str(data["hidden_activation"])
        network = RecurrentNetwork(
            DenseLayer(data["dense_in.w"], data["dense_in.b"], activation),
            LstmLayer(data["lstm.w_x"], data["lstm.w_h"], data["lstm.b"]),
            DenseLayer(data["dense_out.w"], data["dense_out.b"], "linear"))
        extra = {key[len("extra."):]: data[key]
                 for key in data.files if key.startswith("extra.")}
    return network, extra
