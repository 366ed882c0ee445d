"""Tape-based reverse-mode autodiff on numpy arrays.

A Tensor records the op that produced it as a backward closure plus parent
links; ``backward`` runs a topological sweep from a scalar loss and releases
the graph afterwards.
"""

from __future__ import annotations

import numpy as np


class ShapeMismatch(ValueError):
    pass


class NoGraph(RuntimeError):
    """backward() called on a tensor with no recorded graph."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._backward = None
        self._parents: tuple[Tensor, ...] = ()

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def numel(self) -> int:
        return self.data.size

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype)
        else:
            self.grad += g

    def backward(self) -> None:
        """Reverse-mode accumulation from this scalar into every parameter
        gradient reachable through the recorded graph."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar")
        if self._backward is None and not self._parents:
            raise NoGraph("no forward graph recorded")

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
        # release the graph
        for node in order:
            node._backward = None
            node._parents = ()

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def make_result(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    """Wrap an op output; the backward closure is kept only if some parent
    participates in differentiation."""
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad:
        out._parents = tuple(p for p in parents if p.requires_grad or p._parents)
        out._backward = backward
    return out
