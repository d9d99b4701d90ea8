"""
Adam over named network parameters with an exponential learning-rate schedule.
"""

from typing import Dict, Iterable, Tuple

import numpy as np

from nnet.tensor import Tensor


def scheduled_lr(initial_lr: float, decay: float, epoch: int) -> float:
    """``initial_lr * decay ** epoch``."""
    return initial_lr * decay ** epoch


class Adam:
    def __init__(self, parameters: Iterable[Tuple[str, Tensor]], beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.parameters = list(parameters)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: Dict[str, np.ndarray] = {name: np.zeros_like(p.data) for name, p in self.parameters}
        self.v: Dict[str, np.ndarray] = {name: np.zeros_like(p.data) for name, p in self.parameters}

    def zero_grad(self) -> None:
        for _, tensor in self.parameters:
            tensor.zero_grad()

    def step(self, lr: float) -> None:
        """Apply one update; parameters without a gradient are left untouched."""
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for name, tensor in self.parameters:
            if tensor.grad is None:
                continue
            grad = tensor.grad
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * grad
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * grad * grad
            update = lr * (self.m[name] / correction1) / (np.sqrt(self.v[name] / correction2) + self.eps)
            tensor.data = (tensor.data - update).astype(tensor.dtype)
