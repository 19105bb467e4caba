"""Конфигурация обучения промптов."""
from dataclasses import asdict, dataclass
from typing import Any, Dict, Tuple

from dptlab.app.errors import ConfigurationError

METHODS = ('vanilla', 'dpt', 'residual', 'rank-probe', 'full-ft')
PROMPT_METHODS = ('vanilla', 'dpt', 'residual', 'rank-probe')

# Learning rate по умолчанию: 0.3 для промптов, для full-ft на порядки меньше
PROMPT_LR = 0.3
FULL_FT_LR = 1e-3


@dataclass(frozen=True)
class TrainConfig:
    """Гиперпараметры AdamW и цикла обучения.

    Attributes:
        lr: Learning rate, постоянный (по умолчанию: 0.3)
        epochs: Число эпох (по умолчанию: 100)
        betas: Коэффициенты моментов (по умолчанию: (0.9, 0.999))
        eps: Стабилизатор знаменателя (по умолчанию: 1e-8)
        weight_decay: Decoupled weight decay (по умолчанию: 0.01)
        seed: Сид инициализации и перемешивания (по умолчанию: 0)
        batch_size: Примеров на шаг; градиенты усредняются (по умолчанию: 8)
        method: vanilla, dpt, residual, rank-probe или full-ft (по умолчанию: vanilla)
    """
    lr: float = PROMPT_LR
    epochs: int = 100
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.01
    seed: int = 0
    batch_size: int = 8
    method: str = 'vanilla'

    def __post_init__(self):
        if not self.lr > 0:
            raise ConfigurationError(f"lr must be > 0, got {self.lr}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.eps <= 0 or self.weight_decay < 0:
            raise ConfigurationError(f"eps must be > 0 and weight_decay >= 0, got {self.eps}, {self.weight_decay}")
        beta1, beta2 = self.betas
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ConfigurationError(f"betas must lie in [0, 1), got {self.betas}")
        if self.method not in METHODS:
            raise ConfigurationError(f"Unknown method {self.method!r}, expected one of {METHODS}")

    @property
    def is_prompt_method(self) -> bool:
        return self.method in PROMPT_METHODS

    def to_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        values['betas'] = list(self.betas)
        return values
