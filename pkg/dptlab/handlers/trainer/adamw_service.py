"""AdamW с decoupled weight decay."""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Protocol, Sequence, Tuple

import numpy as np

from dptlab.handlers.autodiff.tensor import Tensor

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)


class OptimizerSettings(Protocol):
    lr: float
    betas: Tuple[float, float]
    eps: float
    weight_decay: float


@dataclass
class AdamWState:
    """Моменты AdamW; заводятся только для переданных (обучаемых) тензоров.

    Attributes:
        step: Номер шага t (после первого шага равен 1)
        m: node_id → первый момент
        v: node_id → второй момент
    """
    step: int = 0
    m: Dict[int, np.ndarray] = field(default_factory=dict)
    v: Dict[int, np.ndarray] = field(default_factory=dict)

    def tracked(self) -> int:
        return len(self.m)


def adamw_step(params: Sequence[Tensor], state: AdamWState, config: OptimizerSettings,
               grads: Optional[Sequence[Optional[np.ndarray]]] = None) -> None:
    """
    Один шаг AdamW на месте.

    m ← β₁m + (1−β₁)g; v ← β₂v + (1−β₂)g²; m̂, v̂ с bias correction;
    p ← p − lr·wd·p − lr·m̂/(√v̂ + eps).

    Args:
        params: Обучаемые тензоры θ_P
        state: Состояние оптимизатора (меняется на месте)
        config: lr, betas, eps, weight_decay
        grads: Явные градиенты; по умолчанию берутся p.grad (None считается нулём)
    """
    if grads is None:
        grads = [p.grad for p in params]
    if len(grads) != len(params):
        raise ValueError(f"Got {len(grads)} gradients for {len(params)} parameters")
    beta1, beta2 = config.betas
    state.step += 1
    t = state.step
    correction1 = 1.0 - beta1 ** t
    correction2 = 1.0 - beta2 ** t
    for p, g in zip(params, grads):
        if g is None:
            g = np.zeros_like(p.data)
        elif g.shape != p.data.shape:
            raise ValueError(f"Gradient shape {list(g.shape)} does not match parameter {p.shape}")
        m = state.m.get(p.node_id)
        if m is None:
            m = np.zeros_like(p.data)
            state.v[p.node_id] = np.zeros_like(p.data)
        v = state.v[p.node_id]
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        state.m[p.node_id] = m
        state.v[p.node_id] = v
        update = (m / correction1) / (np.sqrt(v / correction2) + config.eps)
        p.data -= config.lr * config.weight_decay * p.data + config.lr * update
