"""Журнал запуска обучения и его сериализация в CSV/JSON."""
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

import jsons

from dptlab.app.errors import UsageError
from dptlab.app.storage import render_header
from dptlab.handlers.probe.models import ProbeRecord
from dptlab.utils import atomic_write_text, format_float

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)


@dataclass
class RunLog:
    """Журнал одного запуска.

    Attributes:
        steps: (номер шага, loss), номера строго возрастают
        epochs: (номер эпохи, точность на dev)
        trainable_params: Число обучаемых скаляров
        aborted: Прерван ли запуск NaN-защитой
        abort_reason: Причина прерывания
        probe_records: Записи ранкового пробника (если включён)
        config: Эхо разрешённой конфигурации
    """
    steps: List[Tuple[int, float]] = field(default_factory=list)
    epochs: List[Tuple[int, float]] = field(default_factory=list)
    trainable_params: int = 0
    aborted: bool = False
    abort_reason: str = ''
    probe_records: List[ProbeRecord] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)

    def record_step(self, step: int, loss: float) -> None:
        if self.steps and step <= self.steps[-1][0]:
            raise UsageError(f"Step indices must increase: {step} after {self.steps[-1][0]}")
        self.steps.append((step, float(loss)))

    def record_epoch(self, epoch: int, accuracy: float) -> None:
        self.epochs.append((epoch, float(accuracy)))

    def abort(self, reason: str) -> None:
        self.aborted = True
        self.abort_reason = reason
        logger.warning(f"Run aborted: {reason}")

    @property
    def losses(self) -> List[float]:
        return [loss for _, loss in self.steps]

    @property
    def final_accuracy(self) -> float:
        return self.epochs[-1][1] if self.epochs else 0.0

    @property
    def best_accuracy(self) -> float:
        return max((acc for _, acc in self.epochs), default=0.0)

    def summary(self) -> Dict[str, Any]:
        return {
            'final_accuracy': self.final_accuracy,
            'best_accuracy': self.best_accuracy,
            'trainable_params': self.trainable_params,
            'steps': len(self.steps),
            'epochs': len(self.epochs),
            'aborted': self.aborted,
            'abort_reason': self.abort_reason,
            'config': dict(self.config),
        }

    def to_csv(self, header: Optional[Mapping[str, Any]] = None) -> str:
        """
        CSV с секциями `step,loss` и `epoch,accuracy` и строкой итога.

        Числа пишутся с 17 значащими цифрами, времени в выводе нет, поэтому
        повтор запуска с теми же флагами даёт тот же файл байт в байт.
        """
        lines = [render_header(header)] if header else []
        lines.append('step,loss\n')
        lines.extend(f"{step},{format_float(loss)}\n" for step, loss in self.steps)
        lines.append('\nepoch,accuracy\n')
        lines.extend(f"{epoch},{format_float(acc)}\n" for epoch, acc in self.epochs)
        lines.append(
            f"\nsummary,final_accuracy={format_float(self.final_accuracy)},"
            f"best_accuracy={format_float(self.best_accuracy)},trainable_params={self.trainable_params},"
            f"aborted={int(self.aborted)}\n"
        )
        return ''.join(lines)

    def to_json(self) -> str:
        return jsons.dumps(self.summary(), jdkwargs={'sort_keys': True, 'indent': 2})

    def save(self, path: str, header: Optional[Mapping[str, Any]] = None) -> str:
        """
        Записать CSV и JSON-итог рядом (`<stem>.json`).

        Returns:
            Путь к JSON-файлу
        """
        atomic_write_text(path, self.to_csv(header))
        json_path = os.path.splitext(path)[0] + '.json'
        atomic_write_text(json_path, self.to_json() + '\n')
        logger.info(f"Run log written to {path} and {json_path}")
        return json_path
