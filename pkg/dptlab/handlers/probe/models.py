from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

from dptlab.app.storage import render_header

PROBE_CSV_COLUMNS = ('step', 'pos', 'neg', 'zero', 'rank')


@dataclass(frozen=True)
class ProbeRecord:
    """Снимок диагонали Σ на шаге обучения.

    Attributes:
        step: Номер шага оптимизатора (0: до первого шага)
        pos_count: Строго положительные элементы sigma_diag
        neg_count: Строго отрицательные элементы
        zero_count: Точные нули
        numerical_rank: Численный ранг U·ReLU(Σ)·V
    """
    step: int
    pos_count: int
    neg_count: int
    zero_count: int
    numerical_rank: int

    @property
    def total(self) -> int:
        return self.pos_count + self.neg_count + self.zero_count

    def csv_row(self) -> str:
        return f"{self.step},{self.pos_count},{self.neg_count},{self.zero_count},{self.numerical_rank}"


def probe_csv(records: Sequence[ProbeRecord], header: Optional[Mapping[str, Any]] = None) -> str:
    """CSV `step,pos,neg,zero,rank` с заголовком конфигурации."""
    lines = [render_header(header)] if header else []
    lines.append(','.join(PROBE_CSV_COLUMNS) + '\n')
    lines.extend(record.csv_row() + '\n' for record in records)
    return ''.join(lines)
