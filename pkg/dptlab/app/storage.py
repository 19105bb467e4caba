"""Текстовый формат дампа тензоров (чекпоинты, экспорт промптов).

Формат:
    # key = value            (необязательные строки заголовка)
    name shape d0 d1 ...     (заголовок тензора)
    v0 v1 v2 ...             (значения в row-major, 17 значащих цифр)
"""
import logging
from collections import OrderedDict
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from dptlab.app.errors import ParseError
from dptlab.utils import atomic_write_text, format_float

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)


def render_header(header: Mapping[str, Any]) -> str:
    """Отрендерить строки `# key = value` (ключи в исходном порядке)."""
    return ''.join(f"# {key} = {value}\n" for key, value in header.items())


def dumps_tensors(tensors: Mapping[str, np.ndarray], header: Optional[Mapping[str, Any]] = None) -> str:
    """
    Сериализовать тензоры в текстовый дамп.

    Args:
        tensors: Упорядоченный словарь имя → массив
        header: Необязательные пары ключ/значение для заголовка

    Returns:
        Текст дампа
    """
    lines = []
    if header:
        lines.append(render_header(header))
    for name, array in tensors.items():
        if not name or any(ch.isspace() for ch in name):
            raise ValueError(f"Tensor name must be a non-empty token without whitespace: {name!r}")
        array = np.asarray(array, dtype=np.float64)
        dims = ' '.join(str(d) for d in array.shape)
        lines.append(f"{name} shape {dims}".rstrip() + '\n')
        lines.append(' '.join(format_float(v) for v in array.reshape(-1)) + '\n')
    return ''.join(lines)


def loads_tensors(text: str) -> Tuple[Dict[str, str], 'OrderedDict[str, np.ndarray]']:
    """
    Разобрать текстовый дамп.

    Returns:
        (header, tensors): заголовок как строки и упорядоченный словарь массивов

    Raises:
        ParseError: Некорректный заголовок тензора или число значений
    """
    header: Dict[str, str] = {}
    tensors: 'OrderedDict[str, np.ndarray]' = OrderedDict()
    lines = text.split('\n')
    i = 0
    while i < len(lines):
        line = lines[i]
        line_no = i + 1
        if line.startswith('#'):
            body = line[1:].strip()
            if '=' in body:
                key, _, value = body.partition('=')
                header[key.strip()] = value.strip()
            i += 1
            continue
        if not line.strip():
            i += 1
            continue
        parts = line.split()
        if len(parts) < 2 or parts[1] != 'shape':
            raise ParseError(f"expected 'name shape d0 d1 ...', got {line!r}", line_no)
        name = parts[0]
        try:
            shape = tuple(int(d) for d in parts[2:])
        except ValueError:
            raise ParseError(f"non-integer dimension in {line!r}", line_no)
        if i + 1 >= len(lines):
            raise ParseError(f"missing value row for tensor {name}", line_no)
        raw_values = lines[i + 1].split()
        try:
            values = np.array([float(v) for v in raw_values], dtype=np.float64)
        except ValueError:
            raise ParseError(f"non-numeric value for tensor {name}", line_no + 1)
        expected = int(np.prod(shape)) if shape else 1
        if values.size != expected:
            raise ParseError(
                f"tensor {name} declares shape {list(shape)} ({expected} values) but has {values.size}",
                line_no + 1,
            )
        tensors[name] = values.reshape(shape)
        i += 2
    return header, tensors


def save_tensors(path: str, tensors: Mapping[str, np.ndarray], header: Optional[Mapping[str, Any]] = None) -> None:
    """
    Атомарно сохранить тензоры в файл.

    Raises:
        OSError: Ошибка ввода-вывода (сообщение содержит путь)
    """
    text = dumps_tensors(tensors, header)
    try:
        atomic_write_text(path, text)
    except OSError as e:
        raise OSError(f"Failed to write tensor dump {path}: {e}") from e
    logger.info(f"Saved {len(tensors)} tensors to {path}")


def load_tensors(path: str) -> Tuple[Dict[str, str], 'OrderedDict[str, np.ndarray]']:
    """Загрузить тензоры из файла (см. loads_tensors)."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise OSError(f"Failed to read tensor dump {path}: {e}") from e
    header, tensors = loads_tensors(text)
    logger.debug(f"Loaded {len(tensors)} tensors from {path}")
    return header, tensors
