"""Minimal dense numerics for the fixed network architecture.

Hand-differentiated building blocks over float64 numpy arrays: linear layers,
tanh/sigmoid, inverted dropout, an LSTM cell with cached intermediates for
backpropagation through time, RMSProp, global-norm gradient clipping, Xavier
initialization, a central finite-difference checker, and a bit-exact
checkpoint blob format. All forward functions take batched inputs (B, n).
"""

import json
import hashlib
from pathlib import Path

import numpy as np


def sigmoid(x):
    # stable piecewise form: never exponentiates a large positive argument
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ez = np.exp(x[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def xavier_uniform(rng, fan_in, fan_out, shape=None):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


# ---------------------------------------------------------------------------
# Layers: forward returns (output, cache); backward consumes the cache.
# ---------------------------------------------------------------------------

def linear_forward(x, W, b):
    return x @ W + b, x


def linear_backward(dy, cache, W):
    x = cache
    return dy @ W.T, x.T @ dy, dy.sum(axis=0)


def tanh_forward(x):
    y = np.tanh(x)
    return y, y


def tanh_backward(dy, cache):
    y = cache
    return dy * (1.0 - y * y)


def dropout_forward(x, rate, mode, rng):
    """Inverted dropout: train mode zeroes units w.p. rate and rescales
    survivors by 1/(1-rate); eval mode is the identity."""
    if mode == "eval" or rate == 0.0:
        return x, None
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate {rate} outside [0, 1)")
    keep = rng.random(x.shape) >= rate
    scale = keep / (1.0 - rate)
    return x * scale, scale


def dropout_backward(dy, cache):
    return dy if cache is None else dy * cache


class LstmCell:
    """Single LSTM layer parameters: combined kernel over [x, h].

    Gate order in the 4H axis is (input, forget, output, candidate); the
    forget-gate bias slice is initialized to +1 so early training does not
    wash out the cell state.
    """

    def __init__(self, input_size, hidden_size):
        self.input_size = input_size
        self.hidden_size = hidden_size

    def init_params(self, rng, prefix="lstm"):
        H, I = self.hidden_size, self.input_size
        W = xavier_uniform(rng, I + H, 4 * H)
        b = np.zeros(4 * H)
        b[H:2 * H] = 1.0
        return {f"{prefix}/W": W, f"{prefix}/b": b}

    def step(self, x, h, c, W, b):
        H = self.hidden_size
        xh = np.concatenate([x, h], axis=1)
        z = xh @ W + b
        i = sigmoid(z[:, :H])
        f = sigmoid(z[:, H:2 * H])
        o = sigmoid(z[:, 2 * H:3 * H])
        g = np.tanh(z[:, 3 * H:])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        cache = (xh, c, i, f, o, g, tanh_c)
        return h_new, c_new, cache

    def backward_step(self, dh, dc, cache, W):
        H = self.hidden_size
        xh, c_prev, i, f, o, g, tanh_c = cache
        dc_total = dc + dh * o * (1.0 - tanh_c * tanh_c)
        do = dh * tanh_c
        di = dc_total * g
        df = dc_total * c_prev
        dg = dc_total * i
        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            do * o * (1.0 - o),
            dg * (1.0 - g * g),
        ], axis=1)
        dW = xh.T @ dz
        db = dz.sum(axis=0)
        dxh = dz @ W.T
        dx = dxh[:, :self.input_size]
        dh_prev = dxh[:, self.input_size:]
        dc_prev = dc_total * f
        return dx, dh_prev, dc_prev, dW, db


def lstm_unroll(cell, xs, h0, c0, W, b):
    """Run the cell over a (T, B, I) sequence; returns hs (T, B, H), final
    state, and per-step caches for backward_through_time."""
    h, c = h0, c0
    hs, caches = [], []
    for t in range(xs.shape[0]):
        h, c, cache = cell.step(xs[t], h, c, W, b)
        hs.append(h)
        caches.append(cache)
    return np.stack(hs), (h, c), caches


def backward_through_time(cell, caches, dhs, W, dh_final=None, dc_final=None):
    """Exact reverse-mode gradients for an unrolled sequence.

    dhs holds the upstream gradient on each step's hidden output (T, B, H);
    returns (dxs, dW, db, dh0, dc0).
    """
    if not caches:
        raise ValueError("no cached steps to backpropagate through")
    T = len(caches)
    B, H = dhs[0].shape
    dW = np.zeros_like(W)
    db = np.zeros(4 * H)
    dh = np.zeros((B, H)) if dh_final is None else dh_final.copy()
    dc = np.zeros((B, H)) if dc_final is None else dc_final.copy()
    dxs = [None] * T
    for t in range(T - 1, -1, -1):
        dx, dh, dc, dW_t, db_t = cell.backward_step(dh + dhs[t], dc, caches[t], W)
        dW += dW_t
        db += db_t
        dxs[t] = dx
    return np.stack(dxs), dW, db, dh, dc


# ---------------------------------------------------------------------------
# Optimization
# ---------------------------------------------------------------------------

class RMSProp:
    def __init__(self, lr=1e-3, rho=0.9, eps=1e-6):
        self.lr = lr
        self.rho = rho
        self.eps = eps
        self.acc = {}

    def update(self, params, grads):
        for name in sorted(grads):
            g = grads[name]
            acc = self.acc.get(name)
            if acc is None:
                acc = np.zeros_like(params[name])
            acc = self.rho * acc + (1.0 - self.rho) * g * g
            self.acc[name] = acc
            params[name] -= self.lr * g / (np.sqrt(acc) + self.eps)


def clip_global_norm(grads, max_norm):
    """Scale all gradients in place so their global L2 norm is <= max_norm."""
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    norm = np.sqrt(total)
    if norm > max_norm > 0:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def softmax_cross_entropy(logits, labels, weights=None):
    """Mean weighted CE over rows; returns (loss, dlogits)."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    probs = expz / expz.sum(axis=1, keepdims=True)
    n = logits.shape[0]
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    picked = probs[np.arange(n), labels]
    loss = float(np.sum(w * -np.log(np.maximum(picked, 1e-300))) / n)
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits *= (w / n)[:, None]
    return loss, dlogits


# ---------------------------------------------------------------------------
# Verification helpers
# ---------------------------------------------------------------------------

def finite_difference_gradients(f, params, h=1e-5):
    """Central finite differences of scalar f() w.r.t. every entry of every
    array in params (mutated in place during probing, restored after)."""
    grads = {}
    for name, arr in params.items():
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            fp = f()
            flat[k] = orig - h
            fm = f()
            flat[k] = orig
            gflat[k] = (fp - fm) / (2.0 * h)
        grads[name] = g
    return grads


def max_relative_error(analytic, numeric, floor=1e-8):
    worst = 0.0
    for name in analytic:
        a, n = analytic[name], numeric[name]
        denom = np.maximum(np.abs(a) + np.abs(n), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


# ---------------------------------------------------------------------------
# Checkpoint blobs: manifest.json + little-endian params.bin, bit-exact.
# ---------------------------------------------------------------------------

def save_params(directory, params, manifest_extra=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = sorted(params)
    layers = [{"name": n, "shape": list(params[n].shape), "dtype": "<f8"}
              for n in names]
    blob = b"".join(np.ascontiguousarray(params[n], dtype="<f8").tobytes()
                    for n in names)
    manifest = {"format": 1, "layers": layers,
                "blob_sha256": hashlib.sha256(blob).hexdigest()}
    manifest.update(manifest_extra or {})
    (directory / "params.bin").write_bytes(blob)
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


def load_params(directory):
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    blob = (directory / "params.bin").read_bytes()
    if hashlib.sha256(blob).hexdigest() != manifest["blob_sha256"]:
        raise ValueError(f"{directory}: parameter blob does not match manifest hash")
    params = {}
    offset = 0
    for layer in manifest["layers"]:
        n = int(np.prod(layer["shape"])) if layer["shape"] else 1
        nbytes = n * 8
        arr = np.frombuffer(blob[offset:offset + nbytes], dtype="<f8").reshape(layer["shape"])
        params[layer["name"]] = arr.astype(np.float64, copy=True)
        offset += nbytes
    if offset != len(blob):
        raise ValueError(f"{directory}: blob length mismatch")
    return params, manifest
