"""The B x R x C keyword-spotting network.

Prologue: separable conv (depthwise k=11 over the 64 feature channels, then
pointwise to 128), BN, ReLU, dropout. B residual blocks of R separable
sub-blocks at C channels, kernels 13, 15, 17, ... Epilogue: separable conv
k=29 with dilation 2 to 128, pointwise 128 -> 128, then a biased pointwise
to the class count, each with BN/ReLU/dropout except the final projection.
Global average pooling over time yields the logits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import Tensor
from .nn.layers import (
    BatchNorm1d,
    DepthwiseConv1d,
    PointwiseConv1d,
    dropout,
    global_avg_pool,
    relu,
    residual_add,
)


class InvalidConfig(ValueError):
    pass


def kernel_schedule(b: int) -> list[int]:
    """Block kernel sizes: 13, 15, 17, ... stepping by 2."""
    if b < 1:
        raise InvalidConfig("need at least one block")
    return [13 + 2 * i for i in range(b)]


@dataclass
class ModelConfig:
    b: int = 3
    r: int = 2
    c: int = 64
    n_classes: int = 35
    n_feat: int = 64
    prologue_channels: int = 128
    prologue_kernel: int = 11
    epilogue_kernel: int = 29
    epilogue_dilation: int = 2
    epilogue_channels: int = 128
    block_kernels: list[int] = field(default_factory=list)
    dropout_p: float = 0.1

    def __post_init__(self):
        if min(self.b, self.r, self.c) < 1:
            raise InvalidConfig("b, r, c must all be >= 1")
        if self.n_classes < 2:
            raise InvalidConfig("need at least two classes")
        if not self.block_kernels:
            self.block_kernels = kernel_schedule(self.b)
        if len(self.block_kernels) != self.b:
            raise InvalidConfig("block_kernels length must equal b")
        for prev, cur in zip(self.block_kernels, self.block_kernels[1:]):
            if cur <= prev:
                raise InvalidConfig("block kernels must be strictly increasing")
        if any(k % 2 == 0 for k in self.block_kernels):
            raise InvalidConfig("block kernels must be odd")

    @property
    def name(self) -> str:
        return f"{self.b}x{self.r}x{self.c}"

    def to_dict(self) -> dict:
        return {
            "b": self.b, "r": self.r, "c": self.c,
            "n_classes": self.n_classes, "n_feat": self.n_feat,
            "prologue_channels": self.prologue_channels,
            "prologue_kernel": self.prologue_kernel,
            "epilogue_kernel": self.epilogue_kernel,
            "epilogue_dilation": self.epilogue_dilation,
            "epilogue_channels": self.epilogue_channels,
            "block_kernels": list(self.block_kernels),
            "dropout_p": self.dropout_p,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


def parse_model_name(name: str, n_classes: int = 35, **kwargs) -> ModelConfig:
    """Parse the 'BxRxC' naming convention, e.g. '3x2x64'."""
    parts = name.lower().split("x")
    if len(parts) != 3:
        raise InvalidConfig(f"model name {name!r} is not of the form BxRxC")
    try:
        b, r, c = (int(p) for p in parts)
    except ValueError as exc:
        raise InvalidConfig(f"model name {name!r} is not numeric") from exc
    return ModelConfig(b=b, r=r, c=c, n_classes=n_classes, **kwargs)


class _SeparableUnit:
    """Depthwise conv followed by a pointwise projection and batch norm."""

    def __init__(self, cin, cout, kernel, dilation, rng, dtype):
        self.dw = DepthwiseConv1d(cin, kernel, dilation, rng=rng, dtype=dtype)
        self.pw = PointwiseConv1d(cin, cout, rng=rng, dtype=dtype)
        self.bn = BatchNorm1d(cout, dtype=dtype)

    def __call__(self, x, training):
        return self.bn(self.pw(self.dw(x)), training)

    def named_modules(self):
        return {"dw": self.dw, "pw": self.pw, "bn": self.bn}


class _Block:
    """R separable sub-blocks plus a 1x1 + BN projection on the residual
    branch, added before the final activation."""

    def __init__(self, cin, cout, kernel, r, rng, dtype):
        self.subs = []
        ch = cin
        for _ in range(r):
            self.subs.append(_SeparableUnit(ch, cout, kernel, 1, rng, dtype))
            ch = cout
        self.res_pw = PointwiseConv1d(cin, cout, rng=rng, dtype=dtype)
        self.res_bn = BatchNorm1d(cout, dtype=dtype)

    def named_modules(self):
        mods = {}
        for i, sub in enumerate(self.subs):
            for k, v in sub.named_modules().items():
                mods[f"sub{i}.{k}"] = v
        mods["res.pw"] = self.res_pw
        mods["res.bn"] = self.res_bn
        return mods


class Network:
    """A built network with its parameters, BN state and dropout RNG."""

    def __init__(self, cfg: ModelConfig, seed: int = 0, dtype=np.float32):
        self.cfg = cfg
        self.dtype = np.dtype(dtype)
        root = np.random.SeedSequence(seed)
        init_ss, drop_ss = root.spawn(2)
        rng = np.random.default_rng(init_ss)
        self._dropout_seed = drop_ss
        self.dropout_rng = np.random.default_rng(drop_ss)
        self.training = True

        p = cfg.dropout_p
        if not 0.0 <= p < 1.0:
            raise InvalidConfig(f"dropout_p {p} outside [0, 1)")

        self.conv1 = _SeparableUnit(
            cfg.n_feat, cfg.prologue_channels, cfg.prologue_kernel, 1, rng, dtype
        )
        self.blocks = []
        ch = cfg.prologue_channels
        for k in cfg.block_kernels:
            self.blocks.append(_Block(ch, cfg.c, k, cfg.r, rng, dtype))
            ch = cfg.c
        self.conv2 = _SeparableUnit(
            ch, cfg.epilogue_channels, cfg.epilogue_kernel,
            cfg.epilogue_dilation, rng, dtype,
        )
        self.conv3_pw = PointwiseConv1d(
            cfg.epilogue_channels, cfg.epilogue_channels, rng=rng, dtype=dtype
        )
        self.conv3_bn = BatchNorm1d(cfg.epilogue_channels, dtype=dtype)
        # final projection keeps its bias: no BN follows
        self.conv4 = PointwiseConv1d(
            cfg.epilogue_channels, cfg.n_classes, bias=True, rng=rng, dtype=dtype
        )

    # ------------------------------------------------------------- modes

    def train(self):
        self.training = True
        return self

    def eval(self):
        self.training = False
        return self

    # ----------------------------------------------------------- forward

    def forward(self, x) -> Tensor:
        """x: [N, n_feat, T] array or Tensor -> logits Tensor [N, n_classes]."""
        if not isinstance(x, Tensor):
            x = Tensor(np.asarray(x, dtype=self.dtype))
        if x.data.ndim != 3 or x.data.shape[1] != self.cfg.n_feat:
            raise ValueError(f"expected [N, {self.cfg.n_feat}, T], got {x.data.shape}")
        p = self.cfg.dropout_p
        tr = self.training
        rng = self.dropout_rng

        h = dropout(relu(self.conv1(x, tr)), p, tr, rng)
        for block in self.blocks:
            inp = h
            for i, sub in enumerate(block.subs):
                h = sub(h, tr)
                if i < len(block.subs) - 1:
                    h = dropout(relu(h), p, tr, rng)
            res = block.res_bn(block.res_pw(inp), tr)
            h = dropout(relu(residual_add(h, res)), p, tr, rng)
        h = dropout(relu(self.conv2(h, tr)), p, tr, rng)
        h = dropout(relu(self.conv3_bn(self.conv3_pw(h), tr)), p, tr, rng)
        h = self.conv4(h)
        return global_avg_pool(h)

    __call__ = forward

    # -------------------------------------------------------- parameters

    def named_modules(self):
        mods = {}
        for k, v in self.conv1.named_modules().items():
            mods[f"conv1.{k}"] = v
        for i, block in enumerate(self.blocks):
            for k, v in block.named_modules().items():
                mods[f"block{i}.{k}"] = v
        for k, v in self.conv2.named_modules().items():
            mods[f"conv2.{k}"] = v
        mods["conv3.pw"] = self.conv3_pw
        mods["conv3.bn"] = self.conv3_bn
        mods["conv4.pw"] = self.conv4
        return mods

    def named_parameters(self) -> dict[str, Tensor]:
        params = {}
        for mname, mod in self.named_modules().items():
            for pname, p in mod.parameters().items():
                params[f"{mname}.{pname}"] = p
        return params

    def named_buffers(self) -> dict[str, np.ndarray]:
        bufs = {}
        for mname, mod in self.named_modules().items():
            if isinstance(mod, BatchNorm1d):
                for bname, b in mod.buffers().items():
                    bufs[f"{mname}.{bname}"] = b
        return bufs

    def zero_grad(self):
        for p in self.named_parameters().values():
            p.zero_grad()


def build(cfg: ModelConfig, seed: int = 0, dtype=np.float32) -> Network:
    return Network(cfg, seed=seed, dtype=dtype)


def count_params(cfg: ModelConfig) -> int:
    """Trainable scalars: conv weights, biases where present, BN gamma/beta.
    Running statistics are excluded."""
    net = Network(cfg, seed=0)
    return sum(p.numel() for p in net.named_parameters().values())
