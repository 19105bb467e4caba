import logging
from argparse import Namespace

import sentry_sdk

from dptlab.app.errors import UsageError
from dptlab.handlers.experiment import text_static
from dptlab.handlers.experiment.config import build_config
from dptlab.handlers.tasks.dataset_service import save_dataset
from dptlab.handlers.tasks.generators import generate

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)


def cmd_dataset(args: Namespace) -> int:
    """Сгенерировать задачу и записать <out>.train.tsv и <out>.dev.tsv (для --train-file/--dev-file)."""
    with sentry_sdk.start_transaction(op='dataset_cmd', name='Dataset command'):
        if not getattr(args, 'out', None):
            raise UsageError(text_static.MISSING_OUT.format(command='dataset'))
        config = build_config(vars(args), getattr(args, 'config', None)).resolve()
        train_set, dev_set = generate(config.task_spec())
        train_path, dev_path = f"{args.out}.train.tsv", f"{args.out}.dev.tsv"
        save_dataset(train_path, train_set)
        save_dataset(dev_path, dev_set)
        print(text_static.DATASET_WRITTEN.format(train=train_path, dev=dev_path,
                                                 count=len(train_set) + len(dev_set)))
        return 0
