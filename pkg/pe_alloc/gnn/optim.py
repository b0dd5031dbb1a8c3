"""
Adam on a ``ParameterStore``.
"""

from __future__ import annotations

import logging
from typing import Dict, Mapping, Tuple

import numpy as np

from ..core import config
from ..core.exceptions import ContractViolationError
from ..core.tensor import Tensor
from .layers import ParameterStore

logger = logging.getLogger(__name__)


class Adam:
    def __init__(
        self,
        store: ParameterStore,
        lr: float = config.LEARNING_RATE,
        betas: Tuple[float, float] = config.ADAM_BETAS,
        eps: float = config.ADAM_EPS,
    ):
        if lr <= 0 or not (0 <= betas[0] < 1 and 0 <= betas[1] < 1) or eps <= 0:
            raise ContractViolationError(f"invalid Adam settings lr={lr} betas={betas} eps={eps}")
        self.store = store
        self.lr = float(lr)
        self.betas = betas
        self.eps = float(eps)
        self.steps = 0
        self._m: Dict[str, np.ndarray] = {}
        self._v: Dict[str, np.ndarray] = {}

    def step(self, grads: Mapping[str, np.ndarray]) -> None:
        """Apply one update from gradients keyed by parameter name."""
        self.steps += 1
        b1, b2 = self.betas
        fresh = {}
        for name, grad in grads.items():
            m = b1 * self._m.get(name, 0.0) + (1 - b1) * grad
            v = b2 * self._v.get(name, 0.0) + (1 - b2) * grad * grad
            self._m[name], self._v[name] = m, v
            m_hat = m / (1 - b1**self.steps)
            v_hat = v / (1 - b2**self.steps)
            fresh[name] = self.store[name].data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        self.store.assign(fresh)


def named_gradients(store: ParameterStore, grads: Mapping[Tensor, Tensor]) -> Dict[str, np.ndarray]:
    """Re-key tape gradients by parameter name; missing leaves get zeros."""
    out = {}
    for name in store:
        tensor = store[name]
        grad = grads.get(tensor)
        out[name] = np.zeros(tensor.shape) if grad is None else grad.numpy()
    return out
