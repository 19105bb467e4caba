"""Подсчёт обучаемых параметров: формулы и проверка перечислением."""
import logging
from typing import Optional

from dptlab.app.errors import ConfigurationError
from dptlab.handlers.prompts.models import PROMPT_KINDS
from dptlab.handlers.prompts.prompt_service import init_prompt

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)


def trainable_param_count(kind: str, e: int, c: int, b: Optional[int] = None, h: Optional[int] = None) -> int:
    """
    Точное число обучаемых скаляров без построения модели.

    vanilla: ec; dpt: eb + bc; residual: ec + 2eh + h + 3e; rank-probe: e² + c + c².

    Raises:
        ConfigurationError: Неизвестный kind или некорректные размерности

    Examples:
        >>> trainable_param_count('dpt', 1024, 100, b=10)
        11240
        >>> trainable_param_count('residual', 768, 100, h=400)
        693904
    """
    if e < 1 or c < 1:
        raise ConfigurationError(f"Dimensions must be >= 1, got e={e}, c={c}")
    if kind == 'vanilla':
        return e * c
    if kind == 'dpt':
        if b is None or b < 1:
            raise ConfigurationError(f"dpt needs bottleneck b >= 1, got {b}")
        return e * b + b * c
    if kind == 'residual':
        if h is None or h < 1:
            raise ConfigurationError(f"residual needs bottleneck h >= 1, got {h}")
        # P, down + bias, up + bias, gain и bias нормализации
        return e * c + 2 * e * h + h + e + 2 * e
    if kind == 'rank-probe':
        if c > e:
            raise ConfigurationError(f"rank-probe needs c <= e, got c={c}, e={e}")
        return e * e + c + c * c
    raise ConfigurationError(f"Unknown prompt kind {kind!r}, expected one of {PROMPT_KINDS}")


def enumerated_param_count(kind: str, e: int, c: int, b: Optional[int] = None, h: Optional[int] = None) -> int:
    """Построить параметризацию и сложить размеры всех обучаемых тензоров."""
    param = init_prompt(kind, e, c, b=b, h=h, seed=0, init='gaussian')
    return param.trainable_count()


def verify_param_count(kind: str, e: int, c: int, b: Optional[int] = None, h: Optional[int] = None) -> bool:
    formula = trainable_param_count(kind, e, c, b, h)
    enumerated = enumerated_param_count(kind, e, c, b, h)
    if formula != enumerated:
        logger.error(f"Parameter count mismatch for {kind} e={e} c={c} b={b} h={h}: formula {formula}, enumeration {enumerated}")
    return formula == enumerated
