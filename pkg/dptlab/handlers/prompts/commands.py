import logging
from argparse import Namespace
from typing import Dict, List, Optional

import sentry_sdk

from dptlab.app.errors import UsageError
from dptlab.handlers.experiment import text_static
from dptlab.handlers.experiment.config import DESK_PROFILE, MODEL_PROFILES
from dptlab.handlers.prompts.count_service import trainable_param_count, verify_param_count
from dptlab.handlers.prompts.prompt_service import export_product, fit_decomposed, load_vanilla_prompt, relative_residual
from dptlab.handlers.prompts.models import PROMPT_KINDS
from dptlab.utils import format_float, format_k

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)


def _profiles(name: Optional[str]) -> Dict[str, Dict[str, int]]:
    if not name or name == 'desk':
        return {'desk': dict(DESK_PROFILE)}
    if name == 'all':
        return {key: dict(value) for key, value in MODEL_PROFILES.items()}
    if name not in MODEL_PROFILES:
        raise UsageError(f"Unknown profile {name!r}, expected desk, all or one of {sorted(MODEL_PROFILES)}")
    return {name: dict(MODEL_PROFILES[name])}


def count_rows(args: Namespace) -> List[Dict]:
    """Строки таблицы: профиль × метод с учётом явных --e/--c/--b/--h."""
    methods = [args.method] if getattr(args, 'method', None) else list(PROMPT_KINDS)
    for method in methods:
        if method not in PROMPT_KINDS:
            raise UsageError(f"Unknown method {method!r} for count-params, expected one of {PROMPT_KINDS}")
    rows = []
    for profile, dims in _profiles(getattr(args, 'profile', None)).items():
        for key in ('e', 'c', 'b', 'h'):
            if getattr(args, key, None) is not None:
                dims[key] = getattr(args, key)
        for method in methods:
            if method == 'rank-probe' and dims['c'] > dims['e']:
                continue
            count = trainable_param_count(method, dims['e'], dims['c'], b=dims['b'], h=dims['h'])
            rows.append({'profile': profile, 'method': method, **dims, 'count': count})
    return rows


def cmd_count_params(args: Namespace) -> int:
    """Напечатать таблицу числа обучаемых параметров; --verify сверяет с перечислением."""
    with sentry_sdk.start_transaction(op='count_params_cmd', name='Count trainable params command'):
        rows = count_rows(args)
        print(text_static.COUNT_TABLE_HEADER)
        for row in rows:
            floor_k, nearest_k, rounded = format_k(row['count'])
            print(f"{row['profile']},{row['method']},{row['e']},{row['c']},{row['b']},{row['h']},"
                  f"{row['count']},{floor_k},{nearest_k},{rounded}")
        if getattr(args, 'verify', False):
            failed = [
                f"{row['profile']}/{row['method']}" for row in rows
                if not verify_param_count(row['method'], row['e'], row['c'], b=row['b'], h=row['h'])
            ]
            if failed:
                print(text_static.COUNT_VERIFY_FAILED.format(rows=', '.join(failed)))
                return 2
            print(text_static.COUNT_VERIFY_OK)
        return 0


def cmd_compress(args: Namespace) -> int:
    """Сжать экспортированный промпт в форму A·B ранга --b и сохранить произведение."""
    with sentry_sdk.start_transaction(op='compress_cmd', name='Compress prompt command'):
        if not getattr(args, 'prompt', None):
            raise UsageError("compress: missing --prompt")
        if not getattr(args, 'out', None):
            raise UsageError(text_static.MISSING_OUT.format(command='compress'))
        if getattr(args, 'b', None) is None:
            raise UsageError("compress: missing --b")
        source = load_vanilla_prompt(args.prompt)
        fitted = fit_decomposed(source.p, args.b)
        residual = relative_residual(source.p, fitted)
        export_product(fitted, args.out, {'source': args.prompt, 'relative_residual': format_float(residual)})
        print(text_static.COMPRESS_WRITTEN.format(path=args.out, b=args.b, count=fitted.trainable_count(),
                                                  residual=format_float(residual)))
        return 0
