"""The ReSpecNN reconstruction network.

Topology::

    y_hat --rec_fc--> coarse (N, L) --conv--> features --rf_fc--> fine (N, L)
    output = sigmoid(coarse + fine)

``rec_fc`` and ``rf_fc`` are stacks of Linear -> ReLU -> Dropout with a final
Linear to width L; ``conv`` is three stages of Conv1d -> MaxPool -> ReLU on the
coarse estimate viewed as a single-channel signal.
"""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import asdict, dataclass

import numpy as np

from ..core import RngSeed, as_seed
from ..errors import DimensionMismatch, NoForwardContext
from .layers import Conv1d, Dropout, Linear, MaxPool1d, ReLU, Sequential, Sigmoid


@dataclass(frozen=True)
class RespecArch:
    input_dim: int = 16
    output_dim: int = 206
    rec_fc_dims: tuple[int, ...] = (256, 512)
    dropout_p: float = 0.2
    conv_channels: tuple[int, ...] = (8, 16, 32)
    conv_kernel: int = 5
    pool_width: int = 2
    rf_fc_dims: tuple[int, ...] = (512,)

    def __post_init__(self):
        for name in ("rec_fc_dims", "conv_channels", "rf_fc_dims"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        if not 0 <= self.dropout_p < 1:
            raise ValueError("dropout_p must lie in [0, 1)")
        if self.conv_kernel % 2 != 1:
            raise ValueError("conv_kernel must be odd")
        if not self.conv_channels:
            raise ValueError("at least one conv stage is required")
        if self.pooled_length < 1:
            raise ValueError(
                f"output_dim {self.output_dim} is too short for {len(self.conv_channels)} "
                f"pooling stages of width {self.pool_width}")

    @property
    def pooled_length(self) -> int:
        n = self.output_dim
        for _ in self.conv_channels:
            n //= self.pool_width
        return n

    @property
    def flat_dim(self) -> int:
        return self.conv_channels[-1] * self.pooled_length

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("rec_fc_dims", "conv_channels", "rf_fc_dims"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RespecArch":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _fc_stack(n_in, hidden, n_out, p, seed, prefix):
    layers = []
    dims = [n_in, *hidden]
    for i, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
        layers += [Linear(a, b, seed.child(prefix, i).generator()), ReLU(), Dropout(p)]
    layers.append(Linear(dims[-1], n_out, seed.child(prefix, len(hidden)).generator()))
    return Sequential(*layers)


class ReSpecNN:
    def __init__(self, arch: RespecArch, seed: RngSeed | int = 0):
        self.arch = arch
        seed = as_seed(seed).child("init")
        self.rec_fc = _fc_stack(arch.input_dim, arch.rec_fc_dims, arch.output_dim,
                                arch.dropout_p, seed, "rec_fc")
        conv = []
        c_in = 1
        for i, c in enumerate(arch.conv_channels):
            conv += [Conv1d(c_in, c, arch.conv_kernel, seed.child("conv", i).generator()),
                     MaxPool1d(arch.pool_width), ReLU()]
            c_in = c
        self.conv = Sequential(*conv)
        self.rf_fc = _fc_stack(arch.flat_dim, arch.rf_fc_dims, arch.output_dim,
                               arch.dropout_p, seed, "rf_fc")
        self.out = Sigmoid()
        self._blocks = OrderedDict(rec_fc=self.rec_fc, conv=self.conv, rf_fc=self.rf_fc)
        self._ctx = None

    # -- parameters ------------------------------------------------------

    def layers(self):
        """``(name, layer)`` for every parameterised layer, in a fixed order."""
        for bname, block in self._blocks.items():
            for lname, layer in block.named_layers():
                yield f"{bname}.{lname}", layer

    def parameters(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((f"{n}.{k}", layer.params[k])
                           for n, layer in self.layers() for k in sorted(layer.params))

    def gradients(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((f"{n}.{k}", layer.grads[k])
                           for n, layer in self.layers() for k in sorted(layer.params))

    def load_parameters(self, params: dict):
        own = self.parameters()
        missing = set(own) - set(params)
        if missing:
            raise KeyError(f"missing parameters: {sorted(missing)}")
        for name, arr in own.items():
            src = np.asarray(params[name], dtype=np.float64)
            if src.shape != arr.shape:
                raise DimensionMismatch(f"{name}: expected {arr.shape}, got {src.shape}")
            arr[...] = src

    def dropout_layers(self):
        return [l for b in self._blocks.values() for l in b.layers if isinstance(l, Dropout)]

    def set_dropout_rng(self, rng):
        for d in self.dropout_layers():
            d.rng = rng

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters().values())

    # -- passes ----------------------------------------------------------

    def forward(self, Y, train_mode: bool = False) -> np.ndarray:
        """Map normalised readouts ``(N, K)`` (or ``(K,)``) to spectra in (0, 1)."""
        Y = np.asarray(Y, dtype=np.float64)
        single = Y.ndim == 1
        if single:
            Y = Y[None, :]
        if Y.shape[1] != self.arch.input_dim:
            raise DimensionMismatch(f"expected {self.arch.input_dim} inputs, got {Y.shape[1]}")
        coarse = self.rec_fc.forward(Y, train_mode)
        feats = self.conv.forward(coarse[:, :, None], train_mode)
        fine = self.rf_fc.forward(feats.reshape(len(Y), -1), train_mode)
        out = self.out.forward(coarse + fine)
        self._ctx = feats.shape
        return out[0] if single else out

    def backward(self, dout):
        """Backpropagate ``dL/d output``; fills every layer's ``grads`` and
        returns ``dL/d input``."""
        if self._ctx is None:
            raise NoForwardContext("backward called before forward")
        dout = np.asarray(dout, dtype=np.float64)
        single = dout.ndim == 1
        if single:
            dout = dout[None, :]
        dpre = self.out.backward(dout)
        dfeat = self.rf_fc.backward(dpre).reshape(self._ctx)
        dcoarse = dpre + self.conv.backward(dfeat)[:, :, 0]
        dY = self.rec_fc.backward(dcoarse)
        return dY[0] if single else dY

    def zero_grad(self):
        for block in self._blocks.values():
            block.zero_grad()
