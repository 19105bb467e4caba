"""Централизованная конфигурация эксперимента.

Порядок слияния: значения по умолчанию < файл конфигурации < флаги командной
строки. Путь к файлу берётся из --config или переменной окружения
DPTLAB_CONFIG_PATH.

Поддерживаемые форматы файла:
    key = value         (текст, строки с #: комментарии)
    {"key": value}      (JSON, расширение .json)
    CSV, записанный этой программой: читается его заголовок `# key = value`
"""
import dataclasses
import json
import logging
import os
from dataclasses import dataclass, fields
from typing import Any, Dict, Mapping, Optional

from dptlab.app.errors import ConfigurationError, UsageError
from dptlab.handlers.backbone.config import BackboneConfig
from dptlab.handlers.tasks.generators import get_task_spec
from dptlab.handlers.tasks.models import TaskSpec
from dptlab.handlers.trainer.config import FULL_FT_LR, METHODS, PROMPT_LR, TrainConfig
from dptlab.utils import format_float

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)

CONFIG_PATH_ENV = 'DPTLAB_CONFIG_PATH'

# Ключи заголовков sweep/fewshot: читаются командами, а не ExperimentConfig
COMMAND_KEYS = ('sweep', 'sweep_param', 'sweep_values', 'methods', 'seeds', 'workers', 'k')


@dataclass(frozen=True)
class ExperimentConfig:
    """Плоская конфигурация эксперимента со значениями по умолчанию (desk-профиль).

    Attributes:
        Бэкбон:
            e: Размерность эмбеддинга (по умолчанию: 32)
            n_layers: Слоёв в энкодере и декодере (по умолчанию: 2)
            n_heads: Голов внимания (по умолчанию: 2)
            ffn_dim: Ширина feed-forward (по умолчанию: 64)
            vocab_size: Размер словаря (по умолчанию: 64)
            max_len: Максимальная длина последовательности (по умолчанию: 256)
            checkpoint: Путь к чекпоинту бэкбона (по умолчанию: backbone.ckpt)

        Предобучение:
            pretrain_steps: Шагов оптимизатора (по умолчанию: 3000)
            pretrain_batch_size: Примеров на шаг (по умолчанию: 8)
            pretrain_lr: Learning rate (по умолчанию: 0.003)
            corpus_size: Размер синтетического корпуса (по умолчанию: 4096)

        Обучение:
            method: vanilla, dpt, residual, rank-probe, full-ft (по умолчанию: vanilla)
            lr: Learning rate; пусто: 0.3 для промптов и 0.001 для full-ft
            epochs: Эпох (по умолчанию: 100)
            beta1, beta2, eps, weight_decay: AdamW (по умолчанию: 0.9, 0.999, 1e-8, 0.01)
            batch_size: Примеров на шаг (по умолчанию: 8)
            seed: Сид инициализации промпта и перемешивания (по умолчанию: 0)

        Промпт:
            c: Длина промпта (по умолчанию: 16)
            b: Bottleneck A·B (по умолчанию: 4)
            h: Ширина MLP residual-промпта (по умолчанию: 64)
            sigma_t: Целевое std элементов промпта (по умолчанию: 1.0)
            prompt_init: vocab или gaussian (по умолчанию: vocab)
            probe_every: Период снимков ранкового пробника в шагах (по умолчанию: 50)
            prompt_from: Экспортированный промпт для старта vanilla или сжатия в dpt (по умолчанию: пусто)

        Задача:
            task: Имя задачи из реестра (по умолчанию: majority)
            train_size, dev_size: Размеры (по умолчанию: 256, 64)
            task_seed: Сид генерации (по умолчанию: 0)
            train_file, dev_file: Файлы датасета вместо генерации; задаются парой (по умолчанию: пусто)
    """
    # Бэкбон
    e: int = 32
    n_layers: int = 2
    n_heads: int = 2
    ffn_dim: int = 64
    vocab_size: int = 64
    max_len: int = 256
    checkpoint: str = 'backbone.ckpt'

    # Предобучение
    pretrain_steps: int = 3000
    pretrain_batch_size: int = 8
    pretrain_lr: float = 3e-3
    corpus_size: int = 4096

    # Обучение
    method: str = 'vanilla'
    lr: Optional[float] = None
    epochs: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    batch_size: int = 8
    seed: int = 0

    # Промпт
    c: int = 16
    b: int = 4
    h: int = 64
    sigma_t: float = 1.0
    prompt_init: str = 'vocab'
    probe_every: int = 50
    prompt_from: str = ''

    # Задача
    task: str = 'majority'
    train_size: int = 256
    dev_size: int = 64
    task_seed: int = 0
    train_file: str = ''
    dev_file: str = ''

    def replace(self, **overrides) -> 'ExperimentConfig':
        return merge(self, overrides)

    def resolve(self) -> 'ExperimentConfig':
        """
        Заполнить зависящие от метода значения и проверить полноту конфигурации.

        Raises:
            ConfigurationError: Некорректное значение любого поля
        """
        if self.method not in METHODS:
            raise ConfigurationError(f"Unknown method {self.method!r}, expected one of {METHODS}")
        resolved = self
        if self.lr is None:
            resolved = dataclasses.replace(self, lr=FULL_FT_LR if self.method == 'full-ft' else PROMPT_LR)
        # Конструкторы проверяют инварианты своих частей
        resolved.backbone_config()
        resolved.train_config()
        resolved.task_spec()
        for name in ('c', 'b', 'h', 'probe_every', 'pretrain_steps', 'pretrain_batch_size', 'corpus_size'):
            if getattr(resolved, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(resolved, name)}")
        if resolved.method == 'rank-probe' and resolved.c > resolved.e:
            raise ConfigurationError(f"rank-probe needs c <= e, got c={resolved.c}, e={resolved.e}")
        if bool(resolved.train_file) != bool(resolved.dev_file):
            raise ConfigurationError("train_file and dev_file must be given together")
        if resolved.prompt_from and resolved.method not in ('vanilla', 'dpt'):
            raise ConfigurationError(f"prompt_from works with vanilla and dpt, got {resolved.method}")
        return resolved

    def backbone_config(self) -> BackboneConfig:
        return BackboneConfig(e=self.e, n_layers=self.n_layers, n_heads=self.n_heads, ffn_dim=self.ffn_dim,
                              vocab_size=self.vocab_size, max_len=self.max_len)

    def train_config(self) -> TrainConfig:
        lr = self.lr if self.lr is not None else (FULL_FT_LR if self.method == 'full-ft' else PROMPT_LR)
        return TrainConfig(lr=lr, epochs=self.epochs, betas=(self.beta1, self.beta2), eps=self.eps,
                           weight_decay=self.weight_decay, seed=self.seed, batch_size=self.batch_size,
                           method=self.method)

    def task_spec(self) -> TaskSpec:
        try:
            return get_task_spec(self.task, train_size=self.train_size, dev_size=self.dev_size,
                                 seed=self.task_seed, vocab_size=self.vocab_size)
        except UsageError as e:
            raise ConfigurationError(str(e))

    def header(self) -> Dict[str, str]:
        """Пары `key = value` для заголовков CSV (ключи по алфавиту, без времени)."""
        return {name: _render(getattr(self, name)) for name in sorted(f.name for f in fields(self))}


# Профили размерностей для подсчёта параметров
DESK_PROFILE: Dict[str, int] = {'e': 32, 'c': 16, 'b': 4, 'h': 64}
MODEL_PROFILES: Dict[str, Dict[str, int]] = {
    't5-small': {'e': 512, 'c': 100, 'b': 10, 'h': 400},
    't5-base': {'e': 768, 'c': 100, 'b': 10, 'h': 400},
    't5-large': {'e': 1024, 'c': 100, 'b': 10, 'h': 400},
}


def _render(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, float):
        return format_float(value)
    return str(value)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(name: str, value: Any) -> Any:
    kind = _FIELD_TYPES[name]
    if isinstance(value, str):
        value = value.strip()
    try:
        if kind in (int, 'int'):
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError(value)
            return int(value)
        if kind in (float, 'float'):
            return float(value)
        if kind in (Optional[float], 'Optional[float]'):
            return None if value in ('', None) else float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"Bad value for {name}: {value!r}")


def merge(base: ExperimentConfig, overrides: Mapping[str, Any]) -> ExperimentConfig:
    """
    Применить переопределения; неизвестные ключи логируются и пропускаются.

    Raises:
        ConfigurationError: Значение не приводится к типу поля
    """
    values = {}
    for key, value in overrides.items():
        name = key.replace('-', '_')
        if name in COMMAND_KEYS:
            continue
        if name not in _FIELD_TYPES:
            logger.warning(f"Ignoring unknown config key {key!r}")
            continue
        values[name] = _coerce(name, value)
    return dataclasses.replace(base, **values)


def parse_config_text(text: str) -> Dict[str, str]:
    """
    Разобрать текст `key = value`. Строки `# key = value` тоже читаются, так что
    подходит и заголовок CSV; чтение останавливается на первой строке данных CSV.
    """
    values: Dict[str, str] = {}
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith('#'):
            body = stripped[1:].strip()
            key, sep, value = body.partition('=')
            if sep and key.strip().replace('_', '').replace('-', '').isalnum():
                values[key.strip()] = value.strip()
            continue
        key, sep, value = stripped.partition('=')
        if not sep or ',' in key:
            break
        values[key.strip()] = value.strip()
    return values


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Прочитать файл конфигурации (JSON или `key = value`).

    Raises:
        ConfigurationError: Файл не читается или JSON не является объектом
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ConfigurationError(f"Failed to read config {path}: {e}")
    if path.endswith('.json'):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Bad JSON in config {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigurationError(f"Config {path} must contain a JSON object")
        return data
    return parse_config_text(text)


def config_file_values(config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Значения из файла конфигурации: --config или DPTLAB_CONFIG_PATH; без файла пусто.

    Raises:
        UsageError: Файл из --config не существует
        ConfigurationError: Файл не читается
    """
    if config_path:
        if not os.path.exists(config_path):
            raise UsageError(f"Config file not found: {config_path}")
        return load_config_file(config_path)
    env_path = os.getenv(CONFIG_PATH_ENV, '')
    if env_path and os.path.exists(env_path):
        return load_config_file(env_path)
    if env_path:
        logger.warning(f"Config file not found: {env_path}, using defaults")
    return {}


def build_config(flags: Mapping[str, Any], config_path: Optional[str] = None) -> ExperimentConfig:
    """
    Собрать ExperimentConfig: умолчания < файл < флаги (None во флагах: не задан).

    Raises:
        UsageError: Файл из --config не существует
        ConfigurationError: Некорректные значения
    """
    config = merge(ExperimentConfig(), config_file_values(config_path))
    explicit = {k: v for k, v in flags.items() if v is not None and k in _FIELD_TYPES}
    return merge(config, explicit)
