"""Minimal LSTM building blocks shared by the tagger and the classifier.

Everything is plain numpy in float64 with hand-written backpropagation,
which keeps training bit-deterministic for a fixed seed and lets tests
verify analytic gradients against finite differences. Gate layout in the
stacked weight rows is input, forget, candidate, output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softplus(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


@dataclass
class LstmParams:
    w_x: np.ndarray  # (4H, D) input weights
    w_h: np.ndarray  # (4H, H) recurrent weights
    b: np.ndarray  # (4H,)

    @property
    def hidden_dim(self) -> int:
        return self.w_h.shape[1]

    @property
    def input_dim(self) -> int:
        return self.w_x.shape[1]

    def copy(self) -> "LstmParams":
        return LstmParams(self.w_x.copy(), self.w_h.copy(), self.b.copy())

    def arrays(self) -> list[np.ndarray]:
        return [self.w_x, self.w_h, self.b]


def init_lstm(rng: np.random.Generator, input_dim: int, hidden_dim: int) -> LstmParams:
    """All weights and biases uniform in ±1/sqrt(hidden_dim)."""
    k = 1.0 / np.sqrt(hidden_dim)
    return LstmParams(
        w_x=rng.uniform(-k, k, size=(4 * hidden_dim, input_dim)),
        w_h=rng.uniform(-k, k, size=(4 * hidden_dim, hidden_dim)),
        b=rng.uniform(-k, k, size=4 * hidden_dim),
    )


@dataclass
class LstmCache:
    x: np.ndarray
    h_prev: np.ndarray  # (T, H) hidden state entering each step
    c_prev: np.ndarray
    gate_i: np.ndarray
    gate_f: np.ndarray
    gate_g: np.ndarray
    gate_o: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray


def lstm_forward(p: LstmParams, x: np.ndarray) -> tuple[np.ndarray, LstmCache]:
    """Run the cell over a (T, D) sequence; returns (T, H) hidden states."""
    steps = x.shape[0]
    hidden = p.hidden_dim
    x_proj = x @ p.w_x.T + p.b  # (T, 4H)
    h = np.zeros((steps, hidden))
    h_prev = np.zeros((steps, hidden))
    c_prev = np.zeros((steps, hidden))
    gate_i = np.zeros((steps, hidden))
    gate_f = np.zeros((steps, hidden))
    gate_g = np.zeros((steps, hidden))
    gate_o = np.zeros((steps, hidden))
    c_all = np.zeros((steps, hidden))
    tanh_c = np.zeros((steps, hidden))
    h_t = np.zeros(hidden)
    c_t = np.zeros(hidden)
    for t in range(steps):
        h_prev[t] = h_t
        c_prev[t] = c_t
        a = x_proj[t] + p.w_h @ h_t
        i_t = sigmoid(a[:hidden])
        f_t = sigmoid(a[hidden : 2 * hidden])
        g_t = np.tanh(a[2 * hidden : 3 * hidden])
        o_t = sigmoid(a[3 * hidden :])
        c_t = f_t * c_t + i_t * g_t
        tc = np.tanh(c_t)
        h_t = o_t * tc
        gate_i[t], gate_f[t], gate_g[t], gate_o[t] = i_t, f_t, g_t, o_t
        c_all[t] = c_t
        tanh_c[t] = tc
        h[t] = h_t
    cache = LstmCache(x, h_prev, c_prev, gate_i, gate_f, gate_g, gate_o, c_all, tanh_c)
    return h, cache


def lstm_backward(
    p: LstmParams, cache: LstmCache, dh: np.ndarray
) -> tuple[LstmParams, np.ndarray]:
    """Backpropagate (T, H) hidden-state gradients through time.

    Returns parameter gradients (as an LstmParams of the same shapes)
    and the gradient with respect to the inputs.
    """
    steps, hidden = dh.shape
    da = np.zeros((steps, 4 * hidden))
    dh_next = np.zeros(hidden)
    dc_next = np.zeros(hidden)
    for t in range(steps - 1, -1, -1):
        dh_t = dh[t] + dh_next
        i_t, f_t, g_t, o_t = cache.gate_i[t], cache.gate_f[t], cache.gate_g[t], cache.gate_o[t]
        tc = cache.tanh_c[t]
        do = dh_t * tc
        dc = dc_next + dh_t * o_t * (1.0 - tc * tc)
        di = dc * g_t
        dg = dc * i_t
        df = dc * cache.c_prev[t]
        da[t, :hidden] = di * i_t * (1.0 - i_t)
        da[t, hidden : 2 * hidden] = df * f_t * (1.0 - f_t)
        da[t, 2 * hidden : 3 * hidden] = dg * (1.0 - g_t * g_t)
        da[t, 3 * hidden :] = do * o_t * (1.0 - o_t)
        dh_next = p.w_h.T @ da[t]
        dc_next = dc * f_t
    grads = LstmParams(w_x=da.T @ cache.x, w_h=da.T @ cache.h_prev, b=da.sum(axis=0))
    dx = da @ p.w_x
    return grads, dx


def sgd_step(params: LstmParams, grads: LstmParams, lr: float) -> None:
    params.w_x -= lr * grads.w_x
    params.w_h -= lr * grads.w_h
    params.b -= lr * grads.b
