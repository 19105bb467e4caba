"""Конфигурация архитектуры замороженного encoder-decoder трансформера."""
from dataclasses import dataclass, fields
from typing import Any, Dict, Mapping

from dptlab.app.errors import ConfigurationError

# Зарезервированные ID словаря
PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
RESERVED_IDS = (PAD_ID, BOS_ID, EOS_ID)


@dataclass(frozen=True)
class BackboneConfig:
    """Описание архитектуры бэкбона.

    Attributes:
        e: Размерность эмбеддинга (по умолчанию: 32; в статье 512/768/1024)
        n_layers: Число слоёв энкодера и декодера (по умолчанию: 2)
        n_heads: Число голов внимания (по умолчанию: 2)
        ffn_dim: Ширина feed-forward блока (по умолчанию: 64)
        vocab_size: Размер словаря V, включая pad=0, bos=1, eos=2 (по умолчанию: 64)
        max_len: Максимальная длина последовательности, включая промпт (по умолчанию: 256)
    """
    e: int = 32
    n_layers: int = 2
    n_heads: int = 2
    ffn_dim: int = 64
    vocab_size: int = 64
    max_len: int = 256

    def __post_init__(self):
        for name in ('e', 'n_layers', 'n_heads', 'ffn_dim', 'max_len'):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.e % self.n_heads != 0:
            raise ConfigurationError(f"e={self.e} is not divisible by n_heads={self.n_heads}")
        if self.vocab_size <= max(RESERVED_IDS):
            raise ConfigurationError(
                f"vocab_size={self.vocab_size} must include reserved ids pad={PAD_ID}, bos={BOS_ID}, eos={EOS_ID}"
            )

    @property
    def head_dim(self) -> int:
        return self.e // self.n_heads

    def to_header(self) -> Dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_header(cls, header: Mapping[str, Any]) -> 'BackboneConfig':
        """Восстановить конфигурацию из заголовка чекпоинта (значения: строки)."""
        try:
            values = {f.name: int(header[f.name]) for f in fields(cls)}
        except KeyError as e:
            raise ConfigurationError(f"Checkpoint header is missing backbone field {e}")
        except ValueError as e:
            raise ConfigurationError(f"Checkpoint header has a non-integer backbone field: {e}")
        return cls(**values)
