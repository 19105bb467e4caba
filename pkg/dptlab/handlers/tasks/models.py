"""Типы синтетических text-to-text задач."""
from dataclasses import dataclass
from typing import Tuple

from dptlab.app.errors import ConfigurationError, LengthError, VocabularyError

# Раскладка словаря задач (0..2 зарезервированы бэкбоном)
SEP_ID = 3
YES_ID = 4
NO_ID = 5
SENTINEL_IDS = (6, 7, 8, 9)
FIRST_SYMBOL_ID = 10

GENERATOR_KINDS = ('copy', 'majority', 'parity', 'pair-match')

# Размер алфавита по умолчанию; 0 означает «все символы словаря»
DEFAULT_ALPHABET = {
    'copy': 0,
    'majority': 4,
    'parity': 2,
    'pair-match': 8,
}


@dataclass(frozen=True)
class TextToTextExample:
    """Пара (X, Y) и метка класса.

    Attributes:
        input: ID токенов входа X
        target: ID токенов ответа Y (вербализованная метка), длина ≥ 1
        label_id: Номер класса (для учёта распределения, без стратификации)
    """
    input: Tuple[int, ...]
    target: Tuple[int, ...]
    label_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'input', tuple(int(t) for t in self.input))
        object.__setattr__(self, 'target', tuple(int(t) for t in self.target))
        if len(self.target) < 1:
            raise LengthError("Example target must contain at least one token")

    def check_vocabulary(self, vocab_size: int) -> None:
        for token in self.input + self.target:
            if not 0 <= token < vocab_size:
                raise VocabularyError(f"token id {token} out of range for vocabulary of size {vocab_size}")


@dataclass(frozen=True)
class TaskSpec:
    """Описание синтетической задачи.

    Attributes:
        name: Имя в реестре
        kind: Генератор: copy, majority, parity, pair-match
        train_size: Размер train (по умолчанию: 256)
        dev_size: Размер dev (по умолчанию: 64)
        seed: Сид генерации (по умолчанию: 0)
        vocab_size: Размер словаря бэкбона (по умолчанию: 64)
        min_len: Минимальная длина полезной нагрузки (по умолчанию: 3)
        max_len: Максимальная длина полезной нагрузки (по умолчанию: 9)
        alphabet_size: Число символов алфавита (по умолчанию: 0, берётся из DEFAULT_ALPHABET)
    """
    name: str
    kind: str
    train_size: int = 256
    dev_size: int = 64
    seed: int = 0
    vocab_size: int = 64
    min_len: int = 3
    max_len: int = 9
    alphabet_size: int = 0

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ConfigurationError(f"Unknown generator kind {self.kind!r}, expected one of {GENERATOR_KINDS}")
        if self.train_size < 1 or self.dev_size < 1:
            raise ConfigurationError(f"Task sizes must be >= 1, got train={self.train_size}, dev={self.dev_size}")
        if self.min_len < 0 or self.max_len < self.min_len:
            raise ConfigurationError(f"Bad payload length range [{self.min_len}, {self.max_len}]")
        if self.alphabet_size < 0:
            raise ConfigurationError(f"alphabet_size must be >= 0, got {self.alphabet_size}")
        if self.kind == 'pair-match' and self.symbols_needed < 2:
            raise ConfigurationError(f"Task {self.name}: pair-match needs at least 2 symbols, got {self.symbols_needed}")
        if FIRST_SYMBOL_ID + self.symbols_needed > self.vocab_size:
            raise ConfigurationError(
                f"Task {self.name} needs {self.symbols_needed} symbols from id {FIRST_SYMBOL_ID}, "
                f"vocab_size={self.vocab_size} is too small"
            )

    @property
    def symbols_needed(self) -> int:
        if self.alphabet_size:
            return self.alphabet_size
        return DEFAULT_ALPHABET[self.kind] or max(self.vocab_size - FIRST_SYMBOL_ID, 1)

    @property
    def symbols(self) -> Tuple[int, ...]:
        return tuple(range(FIRST_SYMBOL_ID, FIRST_SYMBOL_ID + self.symbols_needed))
