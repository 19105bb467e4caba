import logging
from argparse import Namespace
from typing import Any, Dict, List, Mapping

import sentry_sdk

from dptlab.app.errors import UsageError
from dptlab.handlers.experiment import text_static
from dptlab.handlers.experiment.config import ExperimentConfig, build_config, config_file_values
from dptlab.handlers.experiment.sweep_service import (
    DEFAULT_SEEDS, expand_sweep, fewshot_csv, run_fewshot, run_sweep, sweep_csv,
)
from dptlab.handlers.trainer.config import METHODS
from dptlab.utils import atomic_write_text, parse_int_list

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)

DEFAULT_FEWSHOT_KS = '8,16,32'


def _setting(args: Namespace, file_values: Mapping[str, Any], flag: str, key: str):
    """Флаг командной строки, иначе значение из файла конфигурации (заголовка прошлого запуска)."""
    value = getattr(args, flag, None)
    if value is not None:
        return value
    value = file_values.get(key)
    if value is None or value == '':
        return None
    return ','.join(str(v) for v in value) if isinstance(value, list) else str(value)


def _methods(raw, fallback: str) -> List[str]:
    methods = [m.strip() for m in raw.split(',') if m.strip()] if raw else [fallback]
    for method in methods:
        if method not in METHODS:
            raise UsageError(f"Unknown method {method!r}, expected one of {METHODS}")
    return methods


def _seeds(raw) -> List[int]:
    return parse_int_list(raw, '--seeds') if raw else list(DEFAULT_SEEDS)


def _base_header(config: ExperimentConfig) -> Dict[str, str]:
    """
    Заголовок базовой конфигурации. lr не разрешается: каждый метод свипа берёт
    свой lr по умолчанию, поэтому пустой lr в заголовке воспроизводит запуск.
    """
    config.resolve()
    return dict(config.header())


def cmd_sweep(args: Namespace) -> int:
    """Свип по пресету или полю; строка агрегата на значение и метод."""
    with sentry_sdk.start_transaction(op='sweep_cmd', name='Sweep command'):
        if not getattr(args, 'out', None):
            raise UsageError(text_static.MISSING_OUT.format(command='sweep'))
        file_values = config_file_values(getattr(args, 'config', None))
        param = _setting(args, file_values, 'param', 'sweep')
        if not param:
            raise UsageError("sweep: missing --param")
        raw_values = _setting(args, file_values, 'values', 'sweep_values')
        values = parse_int_list(raw_values, '--values') if raw_values is not None else None
        preset = expand_sweep(param, values)
        config = build_config(vars(args), getattr(args, 'config', None))
        methods = _methods(_setting(args, file_values, 'methods', 'methods'), config.method)
        seeds = _seeds(_setting(args, file_values, 'seeds', 'seeds'))
        raw_workers = _setting(args, file_values, 'workers', 'workers')
        try:
            workers = int(raw_workers) if raw_workers is not None else 1
        except ValueError:
            raise UsageError(f"--workers must be an integer, got {raw_workers!r}")
        if workers < 1:
            raise UsageError(f"--workers must be >= 1, got {workers}")
        header = _base_header(config)
        header.update(sweep=param, sweep_param=preset.param,
                      sweep_values=','.join(str(v) for v in preset.values), methods=','.join(methods),
                      seeds=','.join(str(s) for s in seeds), workers=str(workers))
        rows = run_sweep(config, preset, methods, seeds, workers=workers)
        atomic_write_text(args.out, sweep_csv(rows, header))
        print(text_static.SWEEP_WRITTEN.format(path=args.out, points=len(rows)))
        return 0


def cmd_fewshot(args: Namespace) -> int:
    """Few-shot протокол: общая подвыборка на (k, seed) для всех методов."""
    with sentry_sdk.start_transaction(op='fewshot_cmd', name='Few-shot command'):
        if not getattr(args, 'out', None):
            raise UsageError(text_static.MISSING_OUT.format(command='fewshot'))
        file_values = config_file_values(getattr(args, 'config', None))
        ks = parse_int_list(_setting(args, file_values, 'k', 'k') or DEFAULT_FEWSHOT_KS, '--k')
        for k in ks:
            if k < 1:
                raise UsageError(f"--k values must be >= 1, got {k}")
        config = build_config(vars(args), getattr(args, 'config', None))
        methods = _methods(_setting(args, file_values, 'methods', 'methods'), config.method)
        seeds = _seeds(_setting(args, file_values, 'seeds', 'seeds'))
        header = _base_header(config)
        header.update(k=','.join(str(k) for k in ks), methods=','.join(methods),
                      seeds=','.join(str(s) for s in seeds))
        runs = run_fewshot(config, ks, seeds, methods)
        atomic_write_text(args.out, fewshot_csv(runs, header))
        print(text_static.FEWSHOT_WRITTEN.format(path=args.out, groups=len(ks)))
        return 0
