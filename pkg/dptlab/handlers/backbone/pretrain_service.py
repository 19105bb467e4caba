"""Предобучение бэкбона на синтетическом copy/denoising корпусе."""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from dptlab.app.errors import NumericalError, SizeError
from dptlab.handlers.autodiff import ops
from dptlab.handlers.autodiff.tensor import backward, reset_tape
from dptlab.handlers.backbone.config import BackboneConfig
from dptlab.handlers.backbone.forward_service import forward_promptless
from dptlab.handlers.backbone.models import Backbone
from dptlab.handlers.tasks.models import TextToTextExample
from dptlab.handlers.trainer.adamw_service import AdamWState, adamw_step

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PretrainConfig:
    """Параметры предобучения.

    Attributes:
        steps: Число шагов оптимизатора (по умолчанию: 3000)
        batch_size: Примеров на шаг (по умолчанию: 8)
        lr: Learning rate AdamW (по умолчанию: 3e-3)
        corpus_size: Размер синтетического корпуса (по умолчанию: 4096)
        log_every: Как часто писать loss в лог (по умолчанию: 100)
    """
    steps: int = 3000
    batch_size: int = 8
    lr: float = 3e-3
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.0
    corpus_size: int = 4096
    log_every: int = 100


def pretrain(config: BackboneConfig, corpus: Sequence[TextToTextExample], steps: int, seed: int,
             settings: Optional[PretrainConfig] = None, checkpoint_path: Optional[str] = None) -> Backbone:
    """
    Обучить все веса бэкбона на корпусе и заморозить их.

    Args:
        config: Архитектура
        corpus: Непустой список примеров (вход → ответ)
        steps: Число шагов оптимизатора
        seed: Сид инициализации и порядка примеров
        settings: Оптимизатор и размер батча (по умолчанию PretrainConfig())
        checkpoint_path: Если задан, чекпоинт сохраняется сюда

    Returns:
        Замороженный бэкбон

    Raises:
        SizeError: Пустой корпус
        NumericalError: Loss стал нечисловым
    """
    if not corpus:
        raise SizeError("Pretraining corpus is empty")
    settings = settings or PretrainConfig()
    backbone = Backbone.init(config, seed)
    params = list(backbone.params.values())
    state = AdamWState()
    rng = np.random.default_rng(seed + 1)
    order = rng.permutation(len(corpus))
    cursor = 0
    logger.info(f"Pretraining backbone e={config.e}, layers={config.n_layers} for {steps} steps on {len(corpus)} examples")

    for step in range(1, steps + 1):
        losses = []
        for _ in range(settings.batch_size):
            if cursor == len(order):
                order = rng.permutation(len(corpus))
                cursor = 0
            example = corpus[int(order[cursor])]
            cursor += 1
            loss, _ = forward_promptless(backbone, example.input, example.target)
            losses.append(loss)
        batch_loss = ops.scale(ops.add_n(losses), 1.0 / len(losses))
        value = batch_loss.item()
        if not math.isfinite(value):
            reset_tape()
            raise NumericalError(f"Pretraining loss became non-finite at step {step}")
        for p in params:
            p.zero_grad()
        backward(batch_loss)
        adamw_step(params, state, settings)
        if step % settings.log_every == 0 or step == steps:
            logger.info(f"Pretraining step {step}/{steps}: loss {value:.4f}")

    backbone.freeze()
    if checkpoint_path:
        backbone.save(checkpoint_path)
    return backbone
