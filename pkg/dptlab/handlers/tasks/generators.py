"""Генераторы синтетических задач и реестр задач по имени."""
import dataclasses
import logging
from collections import Counter
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from dptlab.app.errors import ConfigurationError, SizeError, UsageError
from dptlab.handlers.tasks.models import (
    FIRST_SYMBOL_ID, NO_ID, SENTINEL_IDS, SEP_ID, YES_ID, TaskSpec, TextToTextExample,
)

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)

# Во сколько раз число попыток может превышать число нужных уникальных примеров
ATTEMPTS_PER_EXAMPLE = 50


def majority_symbol(payload: Sequence[int]) -> int:
    """Самый частый символ; при равенстве частот: меньший ID."""
    counts = Counter(payload)
    best = max(counts.values())
    return min(s for s, n in counts.items() if n == best)


def parity_answer(payload: Sequence[int], counted_symbol: int = FIRST_SYMBOL_ID) -> int:
    """YES, если counted_symbol встречается чётное число раз (пустая строка: YES)."""
    return YES_ID if sum(1 for t in payload if t == counted_symbol) % 2 == 0 else NO_ID


def _payload(rng: np.random.Generator, spec: TaskSpec, alphabet: Sequence[int]) -> List[int]:
    length = int(rng.integers(spec.min_len, spec.max_len + 1))
    return [int(t) for t in rng.choice(alphabet, size=length)]


def _copy(rng: np.random.Generator, spec: TaskSpec) -> TextToTextExample:
    payload = _payload(rng, spec, spec.symbols)
    if not payload:
        payload = [int(rng.choice(spec.symbols))]
    return TextToTextExample(payload, payload, 0)


def _majority(rng: np.random.Generator, spec: TaskSpec) -> TextToTextExample:
    symbols = spec.symbols
    if spec.max_len < 1:
        raise ConfigurationError(f"Task {spec.name}: majority needs max_len >= 1")
    while True:
        payload = _payload(rng, spec, symbols)
        if not payload:
            continue
        counts = sorted(Counter(payload).values(), reverse=True)
        # Только строки с единственным самым частым символом
        if len(counts) == 1 or counts[0] > counts[1]:
            break
    winner = majority_symbol(payload)
    return TextToTextExample(payload, [winner], winner - FIRST_SYMBOL_ID)


def _parity(rng: np.random.Generator, spec: TaskSpec) -> TextToTextExample:
    payload = _payload(rng, spec, spec.symbols)
    answer = parity_answer(payload, spec.symbols[0])
    # SEP замыкает вход, поэтому пустая полезная нагрузка тоже даёт непустой X
    return TextToTextExample(payload + [SEP_ID], [answer], 0 if answer == YES_ID else 1)


def _pair_match(rng: np.random.Generator, spec: TaskSpec) -> TextToTextExample:
    symbols = list(spec.symbols)
    half = max(1, min(spec.max_len // 2, len(symbols) // 2))
    low = max(1, min(spec.min_len // 2, half))
    match = bool(rng.integers(0, 2))
    first = [int(t) for t in rng.choice(symbols, size=int(rng.integers(low, half + 1)))]
    rest = [s for s in symbols if s not in set(first)]
    second = [int(t) for t in rng.choice(rest, size=int(rng.integers(low, half + 1)))]
    if match:
        position = int(rng.integers(0, len(second)))
        second[position] = int(rng.choice(first))
    answer = YES_ID if match else NO_ID
    return TextToTextExample(first + [SEP_ID] + second, [answer], 0 if match else 1)


GENERATORS: Dict[str, Callable[[np.random.Generator, TaskSpec], TextToTextExample]] = {
    'copy': _copy,
    'majority': _majority,
    'parity': _parity,
    'pair-match': _pair_match,
}

# Реестр задач, доступных из CLI по имени
TASKS: Dict[str, TaskSpec] = {
    'copy': TaskSpec(name='copy', kind='copy'),
    'majority': TaskSpec(name='majority', kind='majority', min_len=5, max_len=11),
    'parity': TaskSpec(name='parity', kind='parity', min_len=0, max_len=10),
    'pair-match': TaskSpec(name='pair-match', kind='pair-match', min_len=2, max_len=8),
}


def get_task_spec(name: str, **overrides) -> TaskSpec:
    """
    Взять задачу из реестра и переопределить поля (размеры, сид, словарь).

    Raises:
        UsageError: Неизвестное имя задачи
    """
    if name not in TASKS:
        raise UsageError(f"Unknown task {name!r}, expected one of {sorted(TASKS)}")
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(TASKS[name], **overrides)


def generate(spec: TaskSpec) -> Tuple[List[TextToTextExample], List[TextToTextExample]]:
    """
    Сгенерировать train и dev без пересечений.

    Примеры генерируются одним потоком из np.random.default_rng(seed); повторы
    отбрасываются, первые train_size уникальных идут в train, следующие в dev.

    Returns:
        (train, dev)

    Raises:
        SizeError: Пространство примеров слишком мало для запрошенных размеров
    """
    rng = np.random.default_rng(spec.seed)
    make = GENERATORS[spec.kind]
    wanted = spec.train_size + spec.dev_size
    seen = set()
    examples: List[TextToTextExample] = []
    attempts = 0
    while len(examples) < wanted:
        attempts += 1
        if attempts > ATTEMPTS_PER_EXAMPLE * wanted:
            raise SizeError(
                f"Task {spec.name} produced only {len(examples)} distinct examples out of {wanted} requested"
            )
        example = make(rng, spec)
        key = (example.input, example.target)
        if key in seen:
            continue
        seen.add(key)
        examples.append(example)
    logger.info(f"Generated task {spec.name}: train={spec.train_size}, dev={spec.dev_size}, seed={spec.seed}")
    return examples[:spec.train_size], examples[spec.train_size:]


def pretraining_corpus(vocab_size: int, size: int, seed: int, min_len: int = 3, max_len: int = 9) -> List[TextToTextExample]:
    """
    Смесь copy и denoising примеров для предобучения бэкбона.

    Строки берутся из токенов SEP..V−1 без сентинелов. В denoising-примере
    случайный отрезок заменяется сентинелом, а ответ: сентинел и отрезок.

    Raises:
        SizeError: size < 1
    """
    if size < 1:
        raise SizeError(f"Pretraining corpus must be nonempty, got size={size}")
    rng = np.random.default_rng(seed)
    pool = [t for t in range(SEP_ID, vocab_size) if t not in SENTINEL_IDS]
    corpus: List[TextToTextExample] = []
    for _ in range(size):
        length = int(rng.integers(min_len, max_len + 1))
        text = [int(t) for t in rng.choice(pool, size=length)]
        if rng.random() < 0.5 or length < 2:
            corpus.append(TextToTextExample(text, text, 0))
            continue
        sentinel = SENTINEL_IDS[0]
        start = int(rng.integers(0, length - 1))
        stop = int(rng.integers(start + 1, min(length, start + 3) + 1))
        corrupted = text[:start] + [sentinel] + text[stop:]
        corpus.append(TextToTextExample(corrupted, [sentinel] + text[start:stop], 1))
    return corpus
