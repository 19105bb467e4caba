"""Запуск одиночных экспериментов, свипов и few-shot протокола."""
import functools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from dptlab.app.errors import ConfigurationError, UsageError
from dptlab.app.storage import render_header
from dptlab.handlers.backbone.models import Backbone
from dptlab.handlers.experiment import text_static
from dptlab.handlers.experiment.config import ExperimentConfig
from dptlab.handlers.probe.models import ProbeRecord
from dptlab.handlers.probe.probe_service import probe_run
from dptlab.handlers.prompts.count_service import trainable_param_count
from dptlab.handlers.prompts.models import PromptParameterization
from dptlab.handlers.prompts.prompt_service import init_prompt, prompt_from_file
from dptlab.handlers.tasks.dataset_service import dataset_digest, load_dataset
from dptlab.handlers.tasks.generators import generate
from dptlab.handlers.tasks.models import TextToTextExample
from dptlab.handlers.trainer.fewshot_service import few_shot_sample
from dptlab.handlers.trainer.runlog import RunLog
from dptlab.handlers.trainer.train_service import train
from dptlab.utils import format_float

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)

DEFAULT_SEEDS = (0, 1, 2)


@dataclass(frozen=True)
class SweepPreset:
    """Именованный свип: какое поле меняется, его значения и зафиксированные поля."""
    param: str
    values: Tuple[int, ...]
    fixed: Mapping[str, int] = field(default_factory=dict)


SWEEP_PRESETS: Dict[str, SweepPreset] = {
    'bottleneck': SweepPreset('b', (4, 6, 8, 10, 12, 14)),
    'length': SweepPreset('c', (20, 100, 200)),
    'shortprompt': SweepPreset('c', (6, 10), {'b': 2}),
    'overparam': SweepPreset('b', (10, 1000, 10000), {'c': 100}),
}

# Поля, которые можно свипать явным списком значений
SWEEPABLE_FIELDS = ('b', 'c', 'h', 'epochs')


@dataclass
class RunResult:
    runlog: RunLog
    param: Optional[PromptParameterization]
    probe_records: List[ProbeRecord] = field(default_factory=list)


@dataclass
class SweepRow:
    """Агрегат по сидам для одной точки свипа и одного метода."""
    param: str
    value: int
    method: str
    accuracies: List[float]
    trainable_params: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def min(self) -> float:
        return float(np.min(self.accuracies))

    @property
    def max(self) -> float:
        return float(np.max(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies))

    def csv_row(self) -> str:
        return ','.join([
            self.param, str(self.value), self.method, format_float(self.mean), format_float(self.min),
            format_float(self.max), format_float(self.std), str(len(self.accuracies)), str(self.trainable_params),
        ])


@functools.lru_cache(maxsize=4)
def load_backbone(path: str) -> Backbone:
    """Загрузить замороженный бэкбон (кэшируется по пути в пределах процесса)."""
    return Backbone.load(path)


def check_backbone(backbone: Backbone, config: ExperimentConfig) -> None:
    """
    Raises:
        ConfigurationError: Архитектура чекпоинта не совпадает с конфигурацией
    """
    expected = config.backbone_config()
    if backbone.config != expected:
        diff = {k: (v, getattr(backbone.config, k)) for k, v in expected.to_header().items()
                if getattr(backbone.config, k) != v}
        raise ConfigurationError(f"Checkpoint architecture differs from config (config, checkpoint): {diff}")


def build_prompt(config: ExperimentConfig, backbone: Backbone) -> Optional[PromptParameterization]:
    if config.method == 'full-ft':
        return None
    if config.prompt_from:
        return prompt_from_file(config.prompt_from, config.method, config.e, config.c, b=config.b)
    return init_prompt(config.method, config.e, config.c, b=config.b, h=config.h, seed=config.seed,
                       embedding_table=backbone.params['embedding'].data, sigma_t=config.sigma_t,
                       init=config.prompt_init)


def load_task_sets(config: ExperimentConfig) -> Tuple[List[TextToTextExample], List[TextToTextExample]]:
    """train и dev: из файлов train_file/dev_file, если они заданы, иначе генерация задачи."""
    if config.train_file and config.dev_file:
        train_set, dev_set = load_dataset(config.train_file), load_dataset(config.dev_file)
        logger.info(f"Loaded datasets {config.train_file} ({len(train_set)}) and {config.dev_file} ({len(dev_set)})")
        return train_set, dev_set
    return generate(config.task_spec())


def run_experiment(config: ExperimentConfig, backbone: Optional[Backbone] = None,
                   train_set: Optional[Sequence[TextToTextExample]] = None,
                   dev_set: Optional[Sequence[TextToTextExample]] = None) -> RunResult:
    """
    Один запуск обучения по разрешённой конфигурации.

    Args:
        config: Конфигурация (будет разрешена)
        backbone: Бэкбон; по умолчанию загружается из config.checkpoint
        train_set: Обучающие примеры; по умолчанию генерируются по config.task
        dev_set: Примеры для оценки

    Returns:
        RunResult с RunLog, обученной параметризацией и записями пробника
    """
    config = config.resolve()
    backbone = backbone if backbone is not None else load_backbone(config.checkpoint)
    check_backbone(backbone, config)
    if train_set is None or dev_set is None:
        train_set, dev_set = load_task_sets(config)
    param = build_prompt(config, backbone)
    records: List[ProbeRecord] = []
    if config.method == 'rank-probe':
        records, runlog = probe_run(backbone, param, train_set, dev_set, config.train_config(), config.probe_every)
    else:
        runlog = train(backbone, param, train_set, dev_set, config.train_config())
    runlog.config = config.header()
    return RunResult(runlog, param, records)


def expand_sweep(param: str, values: Optional[Sequence[int]] = None) -> SweepPreset:
    """
    Развернуть имя пресета или поле с явным списком значений.

    Raises:
        UsageError: Неизвестный параметр или пустой список значений
    """
    if param in SWEEP_PRESETS:
        preset = SWEEP_PRESETS[param]
        if values is not None:
            if not values:
                raise UsageError(f"Sweep {param}: empty value list")
            return SweepPreset(preset.param, tuple(values), preset.fixed)
        return preset
    if param not in SWEEPABLE_FIELDS:
        raise UsageError(f"Unknown sweep {param!r}, expected a preset {sorted(SWEEP_PRESETS)} or a field {SWEEPABLE_FIELDS}")
    if not values:
        raise UsageError(f"Sweep over {param} needs a non-empty value list")
    return SweepPreset(param, tuple(values))


def _count_for(config: ExperimentConfig) -> int:
    if config.method == 'full-ft':
        return 0
    return trainable_param_count(config.method, config.e, config.c, b=config.b, h=config.h)


def _accuracy_job(config: ExperimentConfig) -> float:
    return run_experiment(config).runlog.final_accuracy


def run_sweep(base: ExperimentConfig, preset: SweepPreset, methods: Sequence[str],
              seeds: Sequence[int] = DEFAULT_SEEDS, workers: int = 1,
              backbone: Optional[Backbone] = None) -> List[SweepRow]:
    """
    Прогнать все точки × методы × сиды и свернуть по сидам.

    Args:
        base: Базовая конфигурация
        preset: Поле, значения и зафиксированные поля
        methods: Методы для сравнения (по строке на значение и метод)
        seeds: Сиды (по умолчанию 0, 1, 2)
        workers: Число процессов; 1: последовательно в текущем процессе
        backbone: Уже загруженный бэкбон (только при workers=1)

    Returns:
        Строки в порядке (значение, метод)
    """
    if not seeds:
        raise UsageError("Sweep needs at least one seed")
    if not methods:
        raise UsageError("Sweep needs at least one method")
    grid: List[Tuple[int, str, ExperimentConfig]] = []
    for value in preset.values:
        for method in methods:
            point = base.replace(method=method, **dict(preset.fixed), **{preset.param: value})
            grid.append((value, method, point))
    configs = [point.replace(seed=seed).resolve() for _, _, point in grid for seed in seeds]
    logger.info(f"Sweep over {preset.param}: {len(preset.values)} values x {len(methods)} methods x {len(seeds)} seeds")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            accuracies = list(pool.map(_accuracy_job, configs))
    elif backbone is not None:
        accuracies = [run_experiment(cfg, backbone).runlog.final_accuracy for cfg in configs]
    else:
        accuracies = [_accuracy_job(cfg) for cfg in configs]

    rows = []
    for i, (value, method, point) in enumerate(grid):
        chunk = accuracies[i * len(seeds):(i + 1) * len(seeds)]
        rows.append(SweepRow(preset.param, value, method, list(chunk), _count_for(point)))
    return rows


def sweep_csv(rows: Sequence[SweepRow], header: Optional[Mapping[str, Any]] = None) -> str:
    lines = [render_header(header)] if header else []
    lines.append(text_static.SWEEP_CSV_COLUMNS + '\n')
    lines.extend(row.csv_row() + '\n' for row in rows)
    return ''.join(lines)


@dataclass
class FewShotRun:
    k: int
    seed: int
    method: str
    accuracy: float
    subset_sha256: str


def run_fewshot(base: ExperimentConfig, ks: Sequence[int], seeds: Sequence[int], methods: Sequence[str],
                backbone: Optional[Backbone] = None) -> List[FewShotRun]:
    """
    Few-shot протокол: для каждой пары (k, seed) подвыборка берётся один раз
    и на ней обучаются все методы; dev общий для всех.

    Raises:
        UsageError: k < 1 или k больше обучающего набора
    """
    resolved = base.resolve()
    backbone = backbone if backbone is not None else load_backbone(resolved.checkpoint)
    train_set, dev_set = load_task_sets(resolved)
    for k in ks:
        if k < 1 or k > len(train_set):
            raise UsageError(f"k must be in [1, {len(train_set)}], got {k}")
    runs: List[FewShotRun] = []
    for k in ks:
        for seed in seeds:
            subset = few_shot_sample(train_set, k, seed)
            digest = dataset_digest(subset)
            for method in methods:
                config = base.replace(method=method, seed=seed)
                result = run_experiment(config, backbone, subset, dev_set)
                runs.append(FewShotRun(k, seed, method, result.runlog.final_accuracy, digest))
                logger.info(f"Few-shot k={k} seed={seed} {method}: accuracy {result.runlog.final_accuracy:.4f}")
    return runs


def fewshot_csv(runs: Sequence[FewShotRun], header: Optional[Mapping[str, Any]] = None) -> str:
    """Секция отдельных запусков и секция средних по (k, method)."""
    lines = [render_header(header)] if header else []
    lines.append(text_static.FEWSHOT_RUNS_COLUMNS + '\n')
    lines.extend(
        f"{r.k},{r.seed},{r.method},{format_float(r.accuracy)},{r.subset_sha256}\n" for r in runs
    )
    lines.append('\n' + text_static.FEWSHOT_MEANS_COLUMNS + '\n')
    groups: Dict[Tuple[int, str], List[float]] = {}
    for r in runs:
        groups.setdefault((r.k, r.method), []).append(r.accuracy)
    for (k, method), accs in groups.items():
        lines.append(
            f"{k},{method},{format_float(float(np.mean(accs)))},{format_float(min(accs))},{format_float(max(accs))}\n"
        )
    return ''.join(lines)
