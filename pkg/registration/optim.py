"""
Adaptive-moment descent with step halving for registration costs.

Every accepted step keeps the cost non-increasing: a proposed step that
raises the cost is halved until it does not (or is rejected).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from volume.errors import NonFiniteCost

logger = logging.getLogger(__name__)

CostFunction = Callable[[np.ndarray], Tuple[float, np.ndarray]]


@dataclass
class AdamMoments:
    """First/second-moment estimates for one parameter array."""
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    t: int = 0

    def direction(self, gradient: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(gradient)
            self.v = np.zeros_like(gradient)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * gradient
        self.v = self.beta2 * self.v + (1 - self.beta2) * gradient * gradient
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class DescentResult:
    x: np.ndarray
    cost: float
    initial_cost: float
    iterations: int
    converged: bool
    history: List[float] = field(default_factory=list)


def _check(cost: float, gradient: np.ndarray, where: str) -> None:
    if not math.isfinite(cost) or not np.all(np.isfinite(gradient)):
        raise NonFiniteCost(f"non-finite cost or gradient {where} (cost={cost})")


def descend(fun: CostFunction, x0: np.ndarray, learning_rate, iterations: int,
            tolerance: Optional[float] = None, window: int = 10,
            max_halvings: int = 6, eps: float = 1e-8) -> DescentResult:
    """Minimize ``fun`` from ``x0``.

    ``learning_rate`` is a scalar or an array broadcastable to ``x``. With a
    ``tolerance`` the loop also stops once the relative cost change over the
    last ``window`` accepted iterations falls below it.
    """
    x = np.array(x0, dtype=np.float64)
    cost, gradient = fun(x)
    _check(cost, gradient, "at the start")
    initial = cost
    history = [cost]
    moments = AdamMoments(eps=eps)
    scale = 1.0
    converged = False
    stalls = 0
    iteration = 0
    for iteration in range(1, iterations + 1):
        step = moments.direction(gradient)
        accepted = False
        for _ in range(max_halvings + 1):
            candidate = x - scale * np.asarray(learning_rate) * step
            new_cost, new_gradient = fun(candidate)
            if math.isfinite(new_cost) and new_cost <= cost:
                _check(new_cost, new_gradient, f"at iteration {iteration}")
                x, cost, gradient = candidate, new_cost, new_gradient
                accepted = True
                break
            scale *= 0.5
        if accepted:
            stalls = 0
            scale = min(1.0, scale * 1.25)
        else:
            stalls += 1
            if stalls >= 3:
                logger.debug(f"Descent stalled at iteration {iteration} cost={cost:.6g}")
                converged = True
                break
        history.append(cost)
        if tolerance is not None and len(history) > window:
            reference = history[-window - 1]
            if reference == 0 or abs(reference - cost) / abs(reference) < tolerance:
                converged = True
                break
    logger.debug(f"Descent finished: {iteration} iterations, cost {initial:.6g} -> {cost:.6g}")
    return DescentResult(x, cost, initial, iteration, converged, history)
