"""Layer-wise normalized gradient optimizer, warmup-hold-polynomial-decay
learning rate schedule, and softmax cross-entropy loss.

The optimizer keeps one scalar second moment per parameter tensor and folds
decoupled weight decay into the momentum update:

    v <- ||g||^2 on the first step, else beta2 * v + (1 - beta2) * ||g||^2
    m <- beta1 * m + g / (sqrt(v) + eps) + wd * w
    w <- w - lr * m
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import Tensor
from .nn.tensor import make_result


class StepOutOfRange(ValueError):
    pass


class NonFiniteGradient(FloatingPointError):
    pass


class LabelOutOfRange(IndexError):
    pass


@dataclass
class OptimConfig:
    beta1: float = 0.95
    beta2: float = 0.5
    weight_decay: float = 0.001
    lr_max: float = 0.05
    lr_min: float = 0.001
    warmup_ratio: float = 0.05
    hold_ratio: float = 0.45
    poly_power: int = 2
    eps: float = 1e-8
    total_steps: int = 1000

    def __post_init__(self):
        if not 0.0 <= self.warmup_ratio + self.hold_ratio <= 1.0:
            raise ValueError("warmup_ratio + hold_ratio must lie in [0, 1]")
        if self.lr_min > self.lr_max:
            raise ValueError("lr_min must not exceed lr_max")


def lr_at(step: int, cfg: OptimConfig) -> float:
    """Learning rate at a step: linear warmup from 0 to lr_max, hold, then
    polynomial decay down to exactly lr_min at the final step."""
    t = cfg.total_steps
    if not 0 <= step <= t:
        raise StepOutOfRange(f"step {step} outside [0, {t}]")
    warm_end = cfg.warmup_ratio * t
    hold_end = (cfg.warmup_ratio + cfg.hold_ratio) * t
    if step < warm_end:
        return cfg.lr_max * step / warm_end
    if step < hold_end:
        return cfg.lr_max
    frac = (t - step) / (t - hold_end)
    return cfg.lr_min + (cfg.lr_max - cfg.lr_min) * frac ** cfg.poly_power


class NovoGrad:
    """One state group per parameter tensor.

    Parameters listed in ``no_decay`` (batch-norm scales and shifts) are
    exempt from weight decay.
    """

    def __init__(self, params: dict[str, Tensor], cfg: OptimConfig,
                 no_decay: set[str] | None = None):
        self.params = params
        self.cfg = cfg
        self.no_decay = no_decay or set()
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: 0.0 for name in params}
        self.step_count = 0

    def step(self, lr: float) -> None:
        cfg = self.cfg
        first = self.step_count == 0
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradient(name)
            g2 = float(np.sum(np.square(g, dtype=np.float64)))
            if first:
                self.v[name] = g2
            else:
                self.v[name] = cfg.beta2 * self.v[name] + (1.0 - cfg.beta2) * g2
            wd = 0.0 if name in self.no_decay else cfg.weight_decay
            update = g / (np.sqrt(self.v[name]) + cfg.eps)
            if wd:
                update = update + wd * p.data
            self.m[name] = cfg.beta1 * self.m[name] + update
            p.data -= (lr * self.m[name]).astype(p.data.dtype)
        self.step_count += 1

    def state_tensors(self) -> dict[str, np.ndarray]:
        """Flat view of the optimizer state for checkpointing."""
        out = {}
        for name in self.params:
            out[f"optim.{name}.m"] = self.m[name]
            out[f"optim.{name}.v"] = np.array([self.v[name]])
        return out

    def load_state_tensors(self, tensors: dict[str, np.ndarray], step: int) -> None:
        for name in self.params:
            self.m[name] = np.array(tensors[f"optim.{name}.m"],
                                    dtype=self.params[name].data.dtype)
            self.v[name] = float(tensors[f"optim.{name}.v"][0])
        self.step_count = step


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: Tensor, labels) -> tuple[Tensor, np.ndarray]:
    """Mean negative log-likelihood over the batch.

    Returns the scalar loss (attached to the autodiff graph) and the gradient
    with respect to the logits, (softmax - onehot) / N.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n, k = logits.data.shape
    if labels.min() < 0 or labels.max() >= k:
        raise LabelOutOfRange(f"labels must lie in [0, {k})")

    z = logits.data - logits.data.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss_val = -log_probs[np.arange(n), labels].mean()

    probs = np.exp(log_probs)
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1.0
    grad /= n
    grad = grad.astype(logits.data.dtype)

    def backward(g):
        logits.accumulate_grad(g * grad)

    loss = make_result(np.asarray(loss_val, dtype=logits.data.dtype),
                       (logits,), backward)
    return loss, grad
