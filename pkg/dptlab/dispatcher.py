import argparse
import logging
from dataclasses import fields
from typing import Optional, Sequence

from dptlab.app.errors import UsageError
from dptlab.handlers.backbone.commands import cmd_pretrain
from dptlab.handlers.experiment.commands import cmd_fewshot, cmd_sweep
from dptlab.handlers.experiment.config import MODEL_PROFILES, ExperimentConfig
from dptlab.handlers.prompts.commands import cmd_compress, cmd_count_params
from dptlab.handlers.tasks.commands import cmd_dataset
from dptlab.handlers.trainer.commands import cmd_train

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)


class CommandParser(argparse.ArgumentParser):
    """ArgumentParser, который бросает UsageError вместо выхода с кодом 2."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _flag_type(kind):
    if kind is int:
        return int
    if kind is str:
        return str
    return float


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    """Флаг на каждое поле ExperimentConfig; None означает «не задан»."""
    parser.add_argument('--config', default=None, help='Config file: key = value text, JSON, or a CSV written by dptlab')
    group = parser.add_argument_group('experiment config')
    for f in fields(ExperimentConfig):
        group.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=_flag_type(f.type), default=None)


def init_dispatcher(parser: Optional[argparse.ArgumentParser] = None) -> argparse.ArgumentParser:
    """Register command handlers."""
    parser = parser or CommandParser(prog='dptlab', description='Decomposed prompt tuning desk laboratory')
    subparsers = parser.add_subparsers(dest='command', parser_class=CommandParser)

    pretrain = subparsers.add_parser('pretrain', help='Pretrain the backbone on the synthetic corpus')
    _add_config_flags(pretrain)
    pretrain.add_argument('--out', default=None)
    pretrain.set_defaults(handler=cmd_pretrain)

    train = subparsers.add_parser('train', help='Train one method and write its run log')
    _add_config_flags(train)
    train.add_argument('--out', default=None)
    train.set_defaults(handler=cmd_train)

    sweep = subparsers.add_parser('sweep', help='Sweep a preset or a field over several seeds')
    _add_config_flags(sweep)
    sweep.add_argument('--param', default=None, help='bottleneck, length, shortprompt, overparam or b/c/h/epochs')
    sweep.add_argument('--values', default=None, help='Comma-separated values overriding the preset')
    sweep.add_argument('--seeds', default=None, help='Comma-separated seeds (default 0,1,2)')
    sweep.add_argument('--methods', default=None, help='Comma-separated methods (default --method)')
    sweep.add_argument('--workers', type=int, default=None, help='Worker processes (default 1)')
    sweep.add_argument('--out', default=None)
    sweep.set_defaults(handler=cmd_sweep)

    fewshot = subparsers.add_parser('fewshot', help='Few-shot protocol with a shared subset per seed')
    _add_config_flags(fewshot)
    fewshot.add_argument('--k', default=None, help='Comma-separated shot counts (default 8,16,32)')
    fewshot.add_argument('--seeds', default=None)
    fewshot.add_argument('--methods', default=None)
    fewshot.add_argument('--out', default=None)
    fewshot.set_defaults(handler=cmd_fewshot)

    dataset = subparsers.add_parser('dataset', help='Write the generated task as train/dev dataset files')
    _add_config_flags(dataset)
    dataset.add_argument('--out', default=None, help='Path prefix: <out>.train.tsv and <out>.dev.tsv')
    dataset.set_defaults(handler=cmd_dataset)

    compress = subparsers.add_parser('compress', help='Fit a rank-b A·B product to an exported prompt')
    compress.add_argument('--prompt', default=None, help='Exported prompt file (train writes one for vanilla)')
    compress.add_argument('--b', type=int, default=None)
    compress.add_argument('--out', default=None)
    compress.set_defaults(handler=cmd_compress)

    count = subparsers.add_parser('count-params', help='Print trainable parameter counts')
    count.add_argument('--profile', default=None, choices=['desk', 'all'] + sorted(MODEL_PROFILES))
    count.add_argument('--method', default=None)
    for key in ('e', 'c', 'b', 'h'):
        count.add_argument(f'--{key}', type=int, default=None)
    count.add_argument('--verify', action='store_true')
    count.set_defaults(handler=cmd_count_params)

    logger.debug(f"Registered commands: {sorted(subparsers.choices)}")
    return parser


def parse_command(argv: Sequence[str]) -> argparse.Namespace:
    """
    Raises:
        UsageError: Неизвестная команда или некорректные флаги
    """
    args = init_dispatcher().parse_args(list(argv))
    if not getattr(args, 'handler', None):
        raise UsageError('missing command: pretrain, train, sweep, fewshot, dataset, compress or count-params')
    return args
