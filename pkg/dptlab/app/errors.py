"""Иерархия ошибок лаборатории.

Ошибки значений наследуются от ValueError; NumericalError и
FrozenViolationError стоят отдельно.
"""
from typing import Optional


class DimensionError(ValueError):
    """Несовместимые формы тензоров."""


class VocabularyError(ValueError):
    """ID токена вне словаря."""


class LengthError(ValueError):
    """Последовательность не помещается в max_len."""


class ConfigurationError(ValueError):
    """Некорректные размеры или значения конфигурации."""


class UsageError(ValueError):
    """Неверное использование API или командной строки."""


class SizeError(ValueError):
    """Запрошено больше элементов, чем есть в наборе данных."""


class ParseError(ValueError):
    """Ошибка разбора файла с указанием номера строки."""

    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class NumericalError(ArithmeticError):
    """Численный метод не сошёлся."""


class FrozenViolationError(RuntimeError):
    """Градиент дошёл до замороженных весов θ."""
