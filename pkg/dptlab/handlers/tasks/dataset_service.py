"""Файлы датасетов: строка на пример, `input-ids<TAB>target-ids[<TAB>label-id]`."""
import logging
from typing import List, Sequence

from dptlab.app.errors import LengthError, ParseError
from dptlab.handlers.tasks.models import TextToTextExample
from dptlab.utils import atomic_write_text, sha256_hexdigest

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)


def _render_ids(ids: Sequence[int]) -> str:
    return ' '.join(str(t) for t in ids)


def dumps_dataset(examples: Sequence[TextToTextExample]) -> str:
    return ''.join(
        f"{_render_ids(ex.input)}\t{_render_ids(ex.target)}\t{ex.label_id}\n" for ex in examples
    )


def _parse_ids(raw: str, line_no: int, field: str) -> List[int]:
    try:
        return [int(t) for t in raw.split()]
    except ValueError:
        raise ParseError(f"non-integer token in {field} field: {raw!r}", line_no)


def loads_dataset(text: str) -> List[TextToTextExample]:
    """
    Разобрать текст датасета. Пустые строки пропускаются.

    Raises:
        ParseError: Неверное число полей, нецелые токены или пустой target (с номером строки)
    """
    examples: List[TextToTextExample] = []
    for line_no, line in enumerate(text.split('\n'), start=1):
        if not line.strip():
            continue
        fields = line.rstrip('\r').split('\t')
        if len(fields) not in (2, 3):
            raise ParseError(f"expected 2 or 3 tab-separated fields, got {len(fields)}", line_no)
        input_ids = _parse_ids(fields[0], line_no, 'input')
        target_ids = _parse_ids(fields[1], line_no, 'target')
        label_id = 0
        if len(fields) == 3:
            try:
                label_id = int(fields[2])
            except ValueError:
                raise ParseError(f"non-integer label id: {fields[2]!r}", line_no)
        try:
            examples.append(TextToTextExample(input_ids, target_ids, label_id))
        except LengthError as e:
            raise ParseError(str(e), line_no)
    return examples


def save_dataset(path: str, examples: Sequence[TextToTextExample]) -> None:
    try:
        atomic_write_text(path, dumps_dataset(examples))
    except OSError as e:
        raise OSError(f"Failed to write dataset {path}: {e}") from e
    logger.info(f"Saved {len(examples)} examples to {path}")


def load_dataset(path: str) -> List[TextToTextExample]:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise OSError(f"Failed to read dataset {path}: {e}") from e
    examples = loads_dataset(text)
    logger.debug(f"Loaded {len(examples)} examples from {path}")
    return examples


def dataset_digest(examples: Sequence[TextToTextExample]) -> str:
    """SHA-256 от канонического текстового представления (порядок важен)."""
    return sha256_hexdigest([dumps_dataset(examples).encode('utf-8')])
