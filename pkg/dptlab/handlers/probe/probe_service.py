"""Ранковый пробник: знаки диагонали Σ и численный ранг промпта по ходу обучения."""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from dptlab.app.errors import UsageError
from dptlab.handlers.autodiff.tensor import Tensor, no_grad
from dptlab.handlers.backbone.models import Backbone
from dptlab.handlers.probe.models import ProbeRecord
from dptlab.handlers.probe.svd_service import DEFAULT_TOL_FACTOR, numerical_rank
from dptlab.handlers.prompts.models import PromptParameterization, RankProbePrompt
from dptlab.handlers.tasks.models import TextToTextExample
from dptlab.handlers.trainer.config import TrainConfig
from dptlab.handlers.trainer.runlog import RunLog
from dptlab.handlers.trainer.train_service import train

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)

DEFAULT_PROBE_EVERY = 50


def count_sign_diagonal(sigma_diag) -> Tuple[int, int, int]:
    """(положительные, отрицательные, точные нули) среди элементов sigma_diag."""
    values = sigma_diag.data if isinstance(sigma_diag, Tensor) else np.asarray(sigma_diag, dtype=np.float64)
    return int(np.count_nonzero(values > 0)), int(np.count_nonzero(values < 0)), int(np.count_nonzero(values == 0))


def snapshot(param: RankProbePrompt, step: int, tol_factor: float = DEFAULT_TOL_FACTOR) -> ProbeRecord:
    pos, neg, zero = count_sign_diagonal(param.sigma_diag)
    with no_grad():
        rank = numerical_rank(param.materialize(), tol_factor)
    return ProbeRecord(step, pos, neg, zero, rank)


def probe_run(backbone: Backbone, param: PromptParameterization, train_set: Sequence[TextToTextExample],
              dev_set: Sequence[TextToTextExample], config: TrainConfig,
              every_n_steps: int = DEFAULT_PROBE_EVERY, tol_factor: float = DEFAULT_TOL_FACTOR) -> Tuple[List[ProbeRecord], RunLog]:
    """
    Обучить RankProbe-промпт, снимая ProbeRecord на шаге 0, каждые every_n_steps шагов и на последнем шаге.

    Returns:
        (записи пробника, RunLog с теми же записями в probe_records)

    Raises:
        UsageError: param не RankProbePrompt или every_n_steps < 1
    """
    if not isinstance(param, RankProbePrompt):
        raise UsageError(f"probe_run needs a rank-probe prompt, got {getattr(param, 'kind', type(param).__name__)}")
    if every_n_steps < 1:
        raise UsageError(f"every_n_steps must be >= 1, got {every_n_steps}")
    records: List[ProbeRecord] = []
    last_step = [0]

    def on_step(step: int) -> None:
        last_step[0] = step
        if step % every_n_steps == 0:
            record = snapshot(param, step, tol_factor)
            records.append(record)
            logger.debug(f"probe {record}")

    runlog = train(backbone, param, train_set, dev_set, config, on_step=on_step)
    if not records or records[-1].step != last_step[0]:
        records.append(snapshot(param, last_step[0], tol_factor))
    runlog.probe_records = list(records)
    first, last = records[0], records[-1]
    logger.info(
        f"Probe: positive diagonal entries {first.pos_count} -> {last.pos_count}, "
        f"negative {first.neg_count} -> {last.neg_count}, rank {first.numerical_rank} -> {last.numerical_rank}"
    )
    return records, runlog
