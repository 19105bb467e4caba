import hashlib
import math
import os
import tempfile
from typing import Iterable, List, Tuple

from dptlab.app.errors import UsageError


def format_float(value: float) -> str:
    """Точное (round-trip) текстовое представление float64."""
    return format(float(value), '.17g')


def atomic_write_text(path: str, text: str) -> None:
    """
    Атомарно записать текстовый файл: временный файл в той же папке + os.replace.

    Args:
        path: Путь к итоговому файлу
        text: Содержимое
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix='.tmp-', dir=directory)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def sha256_hexdigest(chunks: Iterable[bytes]) -> str:
    digest = hashlib.sha256()
    for chunk in chunks:
        digest.update(chunk)
    return digest.hexdigest()


def format_k(count: int) -> Tuple[str, str, str]:
    """
    Округлённое представление количества параметров в стиле таблиц статьи.

    В таблицах встречаются разные конвенции (693904 → "693K", но 8680 → "9K"),
    поэтому возвращаем сразу три варианта.

    Args:
        count: Точное количество параметров

    Returns:
        (floor, nearest, one_decimal), например для 11240: ("11K", "11K", "11.2K"),
        для 11240000: ("11240K", "11240K", "11.2M")

    Examples:
        >>> format_k(693904)
        ('693K', '694K', '693.9K')
        >>> format_k(8680)
        ('8K', '9K', '8.7K')
    """
    floor_k = f"{count // 1000}K"
    nearest_k = f"{int(math.floor(count / 1000 + 0.5))}K"
    if count >= 1_000_000:
        one_decimal = f"{count / 1_000_000:.1f}M"
    else:
        one_decimal = f"{count / 1000:.1f}K"
    return floor_k, nearest_k, one_decimal


def parse_int_list(raw: str, flag: str) -> List[int]:
    """
    Разобрать список целых вида "8,16,32".

    Raises:
        UsageError: Если список пуст или содержит не числа
    """
    items = [x.strip() for x in str(raw).split(',') if x.strip()]
    if not items:
        raise UsageError(f"{flag}: empty value list")
    try:
        return [int(x) for x in items]
    except ValueError:
        raise UsageError(f"{flag}: expected comma-separated integers, got {raw!r}")
