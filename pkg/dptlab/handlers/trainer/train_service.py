"""Цикл обучения θ_P при замороженном θ (и базовый full fine-tune)."""
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from dptlab.app.errors import FrozenViolationError, UsageError
from dptlab.handlers.autodiff import ops
from dptlab.handlers.autodiff.tensor import Tensor, backward, no_grad, reset_tape
from dptlab.handlers.backbone.forward_service import exact_match_accuracy, forward
from dptlab.handlers.backbone.models import Backbone
from dptlab.handlers.prompts.models import PromptParameterization
from dptlab.handlers.tasks.models import TextToTextExample
from dptlab.handlers.trainer.adamw_service import AdamWState, adamw_step
from dptlab.handlers.trainer.config import TrainConfig
from dptlab.handlers.trainer.runlog import RunLog

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)

StepCallback = Callable[[int], None]


@dataclass
class ParameterPartition:
    """Разбиение параметров на замороженные θ и обучаемые θ_P.

    Attributes:
        frozen: Имя → тензор бэкбона, не получающий обновлений
        trainable: Имя → тензор, который обновляет оптимизатор
    """
    frozen: 'OrderedDict[str, Tensor]' = field(default_factory=OrderedDict)
    trainable: 'OrderedDict[str, Tensor]' = field(default_factory=OrderedDict)

    def __post_init__(self):
        frozen_ids = {t.node_id for t in self.frozen.values()}
        shared = [name for name, t in self.trainable.items() if t.node_id in frozen_ids]
        if shared:
            raise FrozenViolationError(f"Tensors are both frozen and trainable: {shared}")

    @classmethod
    def for_prompt(cls, backbone: Backbone, param: PromptParameterization) -> 'ParameterPartition':
        if not backbone.frozen:
            raise UsageError("Prompt tuning needs a frozen backbone")
        return cls(OrderedDict(backbone.params), OrderedDict(param.parameters()))

    @classmethod
    def for_full_ft(cls, backbone: Backbone) -> 'ParameterPartition':
        if backbone.frozen:
            raise UsageError("Full fine-tune needs a thawed backbone")
        return cls(OrderedDict(), OrderedDict(backbone.params))

    def check_frozen_untouched(self) -> None:
        """
        Raises:
            FrozenViolationError: Замороженный тензор требует градиент или получил его
        """
        touched = [name for name, t in self.frozen.items() if t.requires_grad or t.grad is not None]
        if touched:
            raise FrozenViolationError(f"Gradient reached frozen backbone weights: {touched[:5]}")

    def missing_gradients(self) -> List[str]:
        return [name for name, t in self.trainable.items() if t.grad is None]

    def trainable_count(self) -> int:
        return sum(t.size for t in self.trainable.values())


def _empty_prompt(backbone: Backbone) -> Tensor:
    return Tensor(np.zeros((backbone.config.e, 0)))


def batch_loss(model: Backbone, p_emb: Tensor, batch: Sequence[TextToTextExample]) -> Tensor:
    """Средний loss по батчу (накопление по последовательностям размера 1)."""
    losses = [forward(model, p_emb, ex.input, ex.target)[0] for ex in batch]
    return ops.scale(ops.add_n(losses), 1.0 / len(losses))


def evaluate(model: Backbone, param: Optional[PromptParameterization], dev_set: Sequence[TextToTextExample]) -> float:
    """Exact-match точность жадного декодирования на dev."""
    with no_grad():
        p_emb = param.materialize() if param is not None else None
    return exact_match_accuracy(model, p_emb, dev_set)


def train(backbone: Backbone, param: Optional[PromptParameterization], train_set: Sequence[TextToTextExample],
          dev_set: Sequence[TextToTextExample], config: TrainConfig, on_step: Optional[StepCallback] = None,
          state: Optional[AdamWState] = None) -> RunLog:
    """
    Обучить θ_P (или весь бэкбон при method=full-ft) и вести RunLog.

    Каждую эпоху данные перемешиваются генератором от config.seed; после эпохи
    считается exact-match точность на dev. Для full-ft обучается размороженная
    копия бэкбона, исходный объект не меняется.

    Args:
        backbone: Бэкбон; для промптовых методов обязан быть заморожен
        param: Параметризация промпта (None для full-ft)
        train_set: Обучающие примеры
        dev_set: Примеры для оценки
        config: Гиперпараметры
        on_step: Вызывается с номером шага после каждого шага и с 0 до обучения
        state: Состояние AdamW (создаётся, если не передано)

    Returns:
        RunLog; при нечисловом loss запуск прерывается и помечается aborted

    Raises:
        UsageError: Несовпадение метода и параметризации или незамороженный бэкбон
        FrozenViolationError: Градиент дошёл до замороженного θ
    """
    if not train_set:
        raise UsageError("Training set is empty")
    if config.method == 'full-ft':
        if param is not None:
            raise UsageError("full-ft trains the backbone itself and takes no prompt")
        model = backbone.thawed_copy() if backbone.frozen else backbone
        partition = ParameterPartition.for_full_ft(model)
    else:
        if param is None or param.kind != config.method:
            raise UsageError(f"Method {config.method} needs a matching prompt, got {param!r}")
        model = backbone
        partition = ParameterPartition.for_prompt(model, param)

    params = list(partition.trainable.values())
    state = state if state is not None else AdamWState()
    runlog = RunLog(trainable_params=partition.trainable_count(), config=config.to_dict())
    rng = np.random.default_rng(config.seed)
    logger.info(
        f"Training {config.method}: {runlog.trainable_params} trainable params, "
        f"{len(train_set)} train / {len(dev_set)} dev examples, {config.epochs} epochs"
    )

    if on_step is not None:
        on_step(0)
    step = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_set))
        for start in range(0, len(order), config.batch_size):
            batch = [train_set[int(i)] for i in order[start:start + config.batch_size]]
            for p in params:
                p.zero_grad()
            p_emb = param.materialize() if param is not None else _empty_prompt(model)
            loss = batch_loss(model, p_emb, batch)
            value = loss.item()
            if not math.isfinite(value):
                reset_tape()
                runlog.abort(f"non-finite loss {value} at step {step + 1}, epoch {epoch}")
                return runlog
            backward(loss)
            partition.check_frozen_untouched()
            adamw_step(params, state, config)
            step += 1
            runlog.record_step(step, value)
            logger.debug(f"step {step}: loss {value:.6f}")
            if on_step is not None:
                on_step(step)
        accuracy = evaluate(model, param, dev_set)
        runlog.record_epoch(epoch, accuracy)
        logger.info(f"Epoch {epoch}/{config.epochs}: dev accuracy {accuracy:.4f}, last loss {runlog.steps[-1][1]:.4f}")
    return runlog
