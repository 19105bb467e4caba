import logging
from typing import List, Sequence, TypeVar

import numpy as np

from dptlab.app.errors import SizeError

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)

T = TypeVar('T')


def few_shot_indices(size: int, k: int, seed: int) -> List[int]:
    """k различных индексов из range(size), равномерно и без стратификации."""
    if k < 1:
        raise SizeError(f"k must be >= 1, got {k}")
    if k > size:
        raise SizeError(f"Cannot sample k={k} examples from a dataset of {size}")
    rng = np.random.default_rng(seed)
    return [int(i) for i in rng.choice(size, size=k, replace=False)]


def few_shot_sample(dataset: Sequence[T], k: int, seed: int) -> List[T]:
    """
    Равномерная выборка k примеров без возвращения.

    Подвыборка зависит только от (len(dataset), k, seed), поэтому все методы
    при одном сиде получают одни и те же примеры.

    Raises:
        SizeError: k < 1 или k > len(dataset)
    """
    indices = few_shot_indices(len(dataset), k, seed)
    logger.debug(f"Few-shot sample k={k}, seed={seed}: {indices}")
    return [dataset[i] for i in indices]
