"""Layers with explicit forward/backward passes over single sequences.

Shapes are [T x D] throughout (time-major, no batch axis); training loops
accumulate gradients across the sequences of a batch. Every backward here is
verified against central finite differences in the test suite.
"""

from __future__ import annotations

import numpy as np

from phrasebreak.neural.param import Parameter

_MASK_FILL = -1e9  # additive pre-softmax mask; exp() underflows to exactly 0


def uniform_init(rng, shape, scale, dtype):
    return rng.uniform(-scale, scale, size=shape).astype(dtype)


def xavier_uniform_init(rng, shape, dtype):
    fan_in, fan_out = shape[0], shape[1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def normal_init(rng, shape, std, dtype):
    return rng.normal(0.0, std, size=shape).astype(dtype)


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


_GELU_C = 0.7978845608028654  # sqrt(2 / pi)
_GELU_A = 0.044715


def gelu(x):
    """Gaussian error linear unit (tanh approximation)."""
    inner = _GELU_C * (x + _GELU_A * x**3)
    return 0.5 * x * (1.0 + np.tanh(inner))


def gelu_grad(x):
    inner = _GELU_C * (x + _GELU_A * x**3)
    tanh_inner = np.tanh(inner)
    return 0.5 * (1.0 + tanh_inner) + 0.5 * x * (1.0 - tanh_inner**2) * _GELU_C * (
        1.0 + 3.0 * _GELU_A * x**2
    )


class Layer:
    """Base: a layer owns parameters and caches forward state for backward."""

    def parameters(self) -> list[Parameter]:
        return []

    def set_training(self, training: bool) -> None:
        pass


class Embedding(Layer):
    """Lookup table [V x D]; backward scatters row gradients."""

    def __init__(self, num_embeddings, dim, rng, name="embedding",
                 dtype=np.float32, init="uniform"):
        if init == "uniform":
            value = uniform_init(rng, (num_embeddings, dim), 0.05, dtype)
        elif init == "normal":
            value = normal_init(rng, (num_embeddings, dim), 0.02, dtype)
        else:
            raise ValueError(f"unknown embedding init {init!r}")
        self.weight = Parameter(f"{name}.weight", value)
        self.num_embeddings = num_embeddings
        self.dim = dim
        self._ids = None

    def parameters(self):
        return [self.weight]

    def forward(self, ids):
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.num_embeddings):
            bad = ids[(ids < 0) | (ids >= self.num_embeddings)]
            raise ValueError(
                f"{self.weight.name}: id {bad[0]} out of range [0, {self.num_embeddings})"
            )
        self._ids = ids
        return self.weight.value[ids]

    def backward(self, dout):
        np.add.at(self.weight.grad, self._ids, dout)
        return None  # ids are not differentiable


class Dense(Layer):
    """Affine map y = x W + b."""

    def __init__(self, in_dim, out_dim, rng, name="dense", dtype=np.float32,
                 init="xavier"):
        if init == "xavier":
            w = xavier_uniform_init(rng, (in_dim, out_dim), dtype)
        elif init == "normal":
            w = normal_init(rng, (in_dim, out_dim), 0.02, dtype)
        else:
            raise ValueError(f"unknown dense init {init!r}")
        self.W = Parameter(f"{name}.W", w)
        self.b = Parameter(f"{name}.b", np.zeros(out_dim, dtype=dtype))
        self._x = None

    def parameters(self):
        return [self.W, self.b]

    def forward(self, x):
        if x.shape[-1] != self.W.value.shape[0]:
            raise ValueError(
                f"{self.W.name}: input width {x.shape[-1]} != {self.W.value.shape[0]}"
            )
        self._x = x
        return x @ self.W.value + self.b.value

    def backward(self, dout):
        self.W.grad += self._x.T @ dout
        self.b.grad += dout.sum(axis=0)
        return dout @ self.W.value.T


class LayerNorm(Layer):
    def __init__(self, dim, name="ln", dtype=np.float32, eps=1e-5):
        self.gamma = Parameter(f"{name}.gamma", np.ones(dim, dtype=dtype))
        self.beta = Parameter(f"{name}.beta", np.zeros(dim, dtype=dtype))
        self.eps = eps
        self._xhat = None
        self._inv_std = None

    def parameters(self):
        return [self.gamma, self.beta]

    def forward(self, x):
        mean = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        self._inv_std = 1.0 / np.sqrt(var + self.eps)
        self._xhat = (x - mean) * self._inv_std
        return self.gamma.value * self._xhat + self.beta.value

    def backward(self, dout):
        xhat = self._xhat
        self.gamma.grad += (dout * xhat).sum(axis=0)
        self.beta.grad += dout.sum(axis=0)
        dxhat = dout * self.gamma.value
        mean_dxhat = dxhat.mean(axis=-1, keepdims=True)
        mean_dxhat_xhat = (dxhat * xhat).mean(axis=-1, keepdims=True)
        return self._inv_std * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat)


class Dropout(Layer):
    """Inverted dropout: survivors scaled by 1/(1-p) so expectation is kept."""

    def __init__(self, p, rng):
        if not 0.0 <= p < 1.0:
            raise ValueError(f"dropout probability must be in [0, 1), got {p}")
        self.p = p
        self.rng = rng
        self.training = True
        self._mask = None

    def set_training(self, training):
        self.training = training

    def forward(self, x):
        if not self.training or self.p == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.p
        self._mask = (self.rng.random(x.shape) < keep).astype(x.dtype) / keep
        return x * self._mask

    def backward(self, dout):
        if self._mask is None:
            return dout
        return dout * self._mask


class GeluActivation(Layer):
    def __init__(self):
        self._x = None

    def forward(self, x):
        self._x = x
        return gelu(x)

    def backward(self, dout):
        return dout * gelu_grad(self._x)


class LSTM(Layer):
    """Unidirectional LSTM over [T x D] with zero initial states.

    Gate order in the fused weights is (input, forget, cell, output); the
    forget-gate bias starts at +1.
    """

    def __init__(self, in_dim, hidden, rng, name="lstm", dtype=np.float32):
        self.in_dim = in_dim
        self.hidden = hidden
        self.Wx = Parameter(f"{name}.Wx", xavier_uniform_init(rng, (in_dim, 4 * hidden), dtype))
        self.Wh = Parameter(f"{name}.Wh", xavier_uniform_init(rng, (hidden, 4 * hidden), dtype))
        b = np.zeros(4 * hidden, dtype=dtype)
        b[hidden:2 * hidden] = 1.0
        self.b = Parameter(f"{name}.b", b)
        self._cache = None

    def parameters(self):
        return [self.Wx, self.Wh, self.b]

    def forward(self, x):
        if x.shape[1] != self.in_dim:
            raise ValueError(f"{self.Wx.name}: input width {x.shape[1]} != {self.in_dim}")
        T = x.shape[0]
        H = self.hidden
        dtype = x.dtype
        gates_x = x @ self.Wx.value + self.b.value  # [T, 4H]
        I = np.empty((T, H), dtype)
        F = np.empty((T, H), dtype)
        G = np.empty((T, H), dtype)
        O = np.empty((T, H), dtype)
        C = np.empty((T, H), dtype)
        TC = np.empty((T, H), dtype)
        h_prev_rows = np.empty((T, H), dtype)
        c_prev_rows = np.empty((T, H), dtype)
        h = np.zeros(H, dtype)
        c = np.zeros(H, dtype)
        out = np.empty((T, H), dtype)
        for t in range(T):
            h_prev_rows[t] = h
            c_prev_rows[t] = c
            z = gates_x[t] + h @ self.Wh.value
            I[t] = sigmoid(z[:H])
            F[t] = sigmoid(z[H:2 * H])
            G[t] = np.tanh(z[2 * H:3 * H])
            O[t] = sigmoid(z[3 * H:])
            c = F[t] * c + I[t] * G[t]
            C[t] = c
            TC[t] = np.tanh(c)
            h = O[t] * TC[t]
            out[t] = h
        self._cache = (x, I, F, G, O, TC, h_prev_rows, c_prev_rows)
        return out

    def backward(self, dout):
        x, I, F, G, O, TC, h_prev_rows, c_prev_rows = self._cache
        T = x.shape[0]
        H = self.hidden
        dZ = np.empty((T, 4 * H), dtype=x.dtype)
        dh_next = np.zeros(H, dtype=x.dtype)
        dc_next = np.zeros(H, dtype=x.dtype)
        Wh_T = self.Wh.value.T
        for t in range(T - 1, -1, -1):
            dh = dout[t] + dh_next
            do = dh * TC[t]
            dc = dh * O[t] * (1.0 - TC[t] ** 2) + dc_next
            df = dc * c_prev_rows[t]
            di = dc * G[t]
            dg = dc * I[t]
            dZ[t, :H] = di * I[t] * (1.0 - I[t])
            dZ[t, H:2 * H] = df * F[t] * (1.0 - F[t])
            dZ[t, 2 * H:3 * H] = dg * (1.0 - G[t] ** 2)
            dZ[t, 3 * H:] = do * O[t] * (1.0 - O[t])
            dc_next = dc * F[t]
            dh_next = dZ[t] @ Wh_T
        self.Wx.grad += x.T @ dZ
        self.Wh.grad += h_prev_rows.T @ dZ
        self.b.grad += dZ.sum(axis=0)
        return dZ @ self.Wx.value.T


class BiLSTM(Layer):
    """Forward and reverse LSTM passes, hidden states concatenated per step."""

    def __init__(self, in_dim, hidden, rng, name="bilstm", dtype=np.float32):
        self.fwd = LSTM(in_dim, hidden, rng, name=f"{name}.fwd", dtype=dtype)
        self.bwd = LSTM(in_dim, hidden, rng, name=f"{name}.bwd", dtype=dtype)
        self.hidden = hidden

    def parameters(self):
        return self.fwd.parameters() + self.bwd.parameters()

    def forward(self, x):
        h_fwd = self.fwd.forward(x)
        h_bwd = self.bwd.forward(x[::-1])[::-1]
        return np.concatenate([h_fwd, h_bwd], axis=1)

    def backward(self, dout):
        H = self.hidden
        dx = self.fwd.backward(np.ascontiguousarray(dout[:, :H]))
        dx_rev = self.bwd.backward(np.ascontiguousarray(dout[::-1, H:]))
        return dx + dx_rev[::-1]


class MultiHeadSelfAttention(Layer):
    """Scaled dot-product self-attention with padding masked both ways.

    Padding key columns get a -1e9 additive bias (attended by nothing) and
    padding query rows have their output zeroed (attend to nothing). The key
    projection carries no bias: softmax is invariant to per-row constants, so
    a key bias would be a dead parameter.
    """

    def __init__(self, dim, num_heads, rng, name="attn", dtype=np.float32):
        if dim % num_heads != 0:
            raise ValueError(f"num_heads {num_heads} must divide width {dim}")
        self.dim = dim
        self.num_heads = num_heads
        self.head_dim = dim // num_heads
        self.Wq = Parameter(f"{name}.Wq", normal_init(rng, (dim, dim), 0.02, dtype))
        self.bq = Parameter(f"{name}.bq", np.zeros(dim, dtype=dtype))
        self.Wk = Parameter(f"{name}.Wk", normal_init(rng, (dim, dim), 0.02, dtype))
        self.Wv = Parameter(f"{name}.Wv", normal_init(rng, (dim, dim), 0.02, dtype))
        self.bv = Parameter(f"{name}.bv", np.zeros(dim, dtype=dtype))
        self.Wo = Parameter(f"{name}.Wo", normal_init(rng, (dim, dim), 0.02, dtype))
        self.bo = Parameter(f"{name}.bo", np.zeros(dim, dtype=dtype))
        self._cache = None

    def parameters(self):
        return [self.Wq, self.bq, self.Wk, self.Wv, self.bv, self.Wo, self.bo]

    def _split_heads(self, x):
        T = x.shape[0]
        return x.reshape(T, self.num_heads, self.head_dim).transpose(1, 0, 2)

    def _merge_heads(self, x):
        return x.transpose(1, 0, 2).reshape(-1, self.dim)

    def forward(self, x, pad_mask=None):
        T = x.shape[0]
        real = np.ones(T, dtype=bool) if pad_mask is None else np.asarray(pad_mask, dtype=bool)
        q = self._split_heads(x @ self.Wq.value + self.bq.value)
        k = self._split_heads(x @ self.Wk.value)
        v = self._split_heads(x @ self.Wv.value + self.bv.value)
        scale = 1.0 / np.sqrt(self.head_dim)
        scores = q @ k.transpose(0, 2, 1) * scale  # [heads, T, T]
        scores = scores + np.where(real, 0.0, _MASK_FILL)[None, None, :]
        scores -= scores.max(axis=-1, keepdims=True)
        exp = np.exp(scores)
        probs = exp / exp.sum(axis=-1, keepdims=True)
        ctx = self._merge_heads(probs @ v)
        out = ctx @ self.Wo.value + self.bo.value
        out[~real] = 0.0
        self._cache = (x, q, k, v, probs, ctx, real, scale)
        return out

    def backward(self, dout):
        x, q, k, v, probs, ctx, real, scale = self._cache
        dout = dout.copy()
        dout[~real] = 0.0
        self.Wo.grad += ctx.T @ dout
        self.bo.grad += dout.sum(axis=0)
        dctx = self._split_heads(dout @ self.Wo.value.T)
        dprobs = dctx @ v.transpose(0, 2, 1)
        dv = probs.transpose(0, 2, 1) @ dctx
        dscores = probs * (dprobs - (dprobs * probs).sum(axis=-1, keepdims=True))
        dq = dscores @ k * scale
        dk = dscores.transpose(0, 2, 1) @ q * scale
        dq, dk, dv = (self._merge_heads(a) for a in (dq, dk, dv))
        self.Wq.grad += x.T @ dq
        self.bq.grad += dq.sum(axis=0)
        self.Wk.grad += x.T @ dk
        self.Wv.grad += x.T @ dv
        self.bv.grad += dv.sum(axis=0)
        return dq @ self.Wq.value.T + dk @ self.Wk.value.T + dv @ self.Wv.value.T


class FeedForward(Layer):
    """Position-wise feed-forward: Dense -> GELU -> Dense."""

    def __init__(self, dim, ffn_size, rng, name="ffn", dtype=np.float32):
        self.expand = Dense(dim, ffn_size, rng, name=f"{name}.expand", dtype=dtype, init="normal")
        self.act = GeluActivation()
        self.project = Dense(ffn_size, dim, rng, name=f"{name}.project", dtype=dtype, init="normal")

    def parameters(self):
        return self.expand.parameters() + self.project.parameters()

    def forward(self, x):
        return self.project.forward(self.act.forward(self.expand.forward(x)))

    def backward(self, dout):
        return self.expand.backward(self.act.backward(self.project.backward(dout)))


class TransformerEncoderBlock(Layer):
    """Post-norm encoder block: LN(x + attn(x)), then LN(h + ffn(h))."""

    def __init__(self, dim, num_heads, ffn_size, rng, dropout_p=0.0,
                 name="block", dtype=np.float32):
        self.attn = MultiHeadSelfAttention(dim, num_heads, rng, name=f"{name}.attn", dtype=dtype)
        self.ln1 = LayerNorm(dim, name=f"{name}.ln1", dtype=dtype)
        self.ffn = FeedForward(dim, ffn_size, rng, name=f"{name}.ffn", dtype=dtype)
        self.ln2 = LayerNorm(dim, name=f"{name}.ln2", dtype=dtype)
        self.drop1 = Dropout(dropout_p, rng)
        self.drop2 = Dropout(dropout_p, rng)

    def parameters(self):
        return (
            self.attn.parameters() + self.ln1.parameters()
            + self.ffn.parameters() + self.ln2.parameters()
        )

    def set_training(self, training):
        self.drop1.set_training(training)
        self.drop2.set_training(training)

    def forward(self, x, pad_mask=None):
        attn_out = self.drop1.forward(self.attn.forward(x, pad_mask))
        h = self.ln1.forward(x + attn_out)
        ffn_out = self.drop2.forward(self.ffn.forward(h))
        return self.ln2.forward(h + ffn_out)

    def backward(self, dout):
        dsum2 = self.ln2.backward(dout)
        dh = dsum2 + self.ffn.backward(self.drop2.backward(dsum2))
        dsum1 = self.ln1.backward(dh)
        return dsum1 + self.attn.backward(self.drop1.backward(dsum1))
