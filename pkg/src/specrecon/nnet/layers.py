"""Differentiable layers with hand-written backward passes.

Every layer caches what it needs during ``forward`` and consumes it in
``backward(dout)``, which returns the gradient w.r.t. the layer input and
stores parameter gradients in ``self.grads`` (same keys as ``self.params``).

Shapes: fully-connected layers take ``(N, features)``; convolution and
pooling are channels-last, ``(N, length, channels)``.
"""

import numpy as np

from ..errors import DimensionMismatch, NoForwardContext


class Layer:
    def __init__(self):
        self.params = {}
        self.grads = {}
        self._cache = None

    def forward(self, x, train=False):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def _pop(self):
        if self._cache is None:
            raise NoForwardContext(f"{type(self).__name__}.backward called before forward")
        return self._cache

    def zero_grad(self):
        for k, v in self.params.items():
            self.grads[k] = np.zeros_like(v)


def _fan_in_uniform(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Linear(Layer):
    def __init__(self, n_in, n_out, rng=None):
        super().__init__()
        self.n_in, self.n_out = n_in, n_out
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params["W"] = _fan_in_uniform(rng, (n_in, n_out), n_in)
        self.params["b"] = np.zeros(n_out)
        self.zero_grad()

    def forward(self, x, train=False):
        if x.shape[-1] != self.n_in:
            raise DimensionMismatch(f"Linear expects {self.n_in} features, got {x.shape[-1]}")
        self._cache = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, dout):
        x = self._pop()
        self.grads["W"] = x.T @ dout
        self.grads["b"] = dout.sum(axis=0)
        return dout @ self.params["W"].T


class ReLU(Layer):
    def forward(self, x, train=False):
        mask = x > 0
        self._cache = mask
        return np.where(mask, x, 0.0)

    def backward(self, dout):
        return np.where(self._pop(), dout, 0.0)


class Sigmoid(Layer):
    def forward(self, x, train=False):
        # split by sign so exp never overflows
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        self._cache = out
        return out

    def backward(self, dout):
        s = self._pop()
        return dout * s * (1.0 - s)


class Dropout(Layer):
    """Inverted dropout: survivors are scaled by ``1 / (1 - p)`` at train time,
    so evaluation is the identity.

    Set ``fixed_mask`` to replay a recorded mask (used by gradient checks);
    otherwise a fresh mask is drawn from ``self.rng`` on every train pass.
    """

    def __init__(self, p=0.2):
        super().__init__()
        if not 0 <= p < 1:
            raise ValueError("dropout probability must lie in [0, 1)")
        self.p = p
        self.rng = None
        self.mask = None
        self.fixed_mask = None

    def forward(self, x, train=False):
        mask = None
        if train and self.p > 0:
            mask = self.fixed_mask
            if mask is None:
                if self.rng is None:
                    raise RuntimeError("Dropout needs an rng (or a fixed mask) in train mode")
                mask = (self.rng.random(x.shape) >= self.p) / (1.0 - self.p)
        self.mask = mask
        self._cache = (mask,)
        return x if mask is None else x * mask

    def backward(self, dout):
        (mask,) = self._pop()
        return dout if mask is None else dout * mask


class Conv1d(Layer):
    """Stride-1 convolution (cross-correlation) with 'same' zero padding.

    Channels-last: input ``(N, L, C_in)``, output ``(N, L, C_out)``.  The
    weight has shape ``(kernel, C_in, C_out)``.
    """

    def __init__(self, c_in, c_out, kernel, rng=None):
        super().__init__()
        if kernel % 2 != 1:
            raise ValueError("kernel size must be odd for same padding")
        self.c_in, self.c_out, self.kernel = c_in, c_out, kernel
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = c_in * kernel
        self.params["W"] = _fan_in_uniform(rng, (kernel, c_in, c_out), fan_in)
        self.params["b"] = np.zeros(c_out)
        self.zero_grad()

    def forward(self, x, train=False):
        N, L, C = x.shape
        if C != self.c_in:
            raise DimensionMismatch(f"Conv1d expects {self.c_in} channels, got {C}")
        k, pad = self.kernel, self.kernel // 2
        xp = np.zeros((N, L + 2 * pad, C))
        xp[:, pad:pad + L] = x
        # rows of cols are the k * C_in receptive field of one output sample
        cols = np.empty((N, L, k, C))
        for j in range(k):
            cols[:, :, j] = xp[:, j:j + L]
        cols = cols.reshape(N * L, k * C)
        out = cols @ self.params["W"].reshape(k * C, self.c_out) + self.params["b"]
        self._cache = (cols, x.shape)
        return out.reshape(N, L, self.c_out)

    def backward(self, dout):
        cols, (N, L, C) = self._pop()
        k, pad = self.kernel, self.kernel // 2
        d2 = dout.reshape(N * L, self.c_out)
        Wm = self.params["W"].reshape(k * C, self.c_out)
        self.grads["W"] = (cols.T @ d2).reshape(self.params["W"].shape)
        self.grads["b"] = d2.sum(axis=0)
        dcols = (d2 @ Wm.T).reshape(N, L, k, C)
        dxp = np.zeros((N, L + 2 * pad, C))
        for j in range(k):
            dxp[:, j:j + L] += dcols[:, :, j]
        return dxp[:, pad:pad + L]


class MaxPool1d(Layer):
    """Non-overlapping max pooling over axis 1 of ``(N, L, C)``.

    A trailing remainder shorter than the window is dropped.  The gradient is
    routed to the first maximal element of each window.
    """

    def __init__(self, width=2):
        super().__init__()
        self.width = width

    def forward(self, x, train=False):
        N, L, C = x.shape
        w = self.width
        Lo = L // w
        if Lo < 1:
            raise DimensionMismatch(f"pool width {w} exceeds input length {L}")
        out = x[:, 0:Lo * w:w].copy()
        arg = np.zeros(out.shape, dtype=np.int8 if w < 128 else np.int64)
        for r in range(1, w):
            cand = x[:, r:Lo * w:w]
            better = cand > out
            out[better] = cand[better]
            arg[better] = r
        self._cache = (arg, x.shape)
        return out

    def backward(self, dout):
        arg, (N, L, C) = self._pop()
        w = self.width
        Lo = dout.shape[1]
        dx = np.zeros((N, L, C))
        for r in range(w):
            dx[:, r:Lo * w:w] = np.where(arg == r, dout, 0.0)
        return dx


class Sequential(Layer):
    def __init__(self, *layers):
        super().__init__()
        self.layers = list(layers)

    def forward(self, x, train=False):
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, dout):
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout

    def named_layers(self):
        for i, layer in enumerate(self.layers):
            if layer.params:
                yield str(i), layer

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()
