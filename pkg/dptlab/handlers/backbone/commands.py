import logging
from argparse import Namespace

import sentry_sdk

from dptlab.app.errors import UsageError
from dptlab.handlers.backbone.pretrain_service import PretrainConfig, pretrain
from dptlab.handlers.experiment import text_static
from dptlab.handlers.experiment.config import build_config
from dptlab.handlers.tasks.generators import pretraining_corpus

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)


def cmd_pretrain(args: Namespace) -> int:
    """Предобучить бэкбон и сохранить чекпоинт в --out."""
    with sentry_sdk.start_transaction(op='pretrain_cmd', name='Pretrain backbone command'):
        if not getattr(args, 'out', None):
            raise UsageError(text_static.MISSING_OUT.format(command='pretrain'))
        config = build_config(vars(args), getattr(args, 'config', None)).resolve()
        settings = PretrainConfig(steps=config.pretrain_steps, batch_size=config.pretrain_batch_size,
                                  lr=config.pretrain_lr, corpus_size=config.corpus_size)
        corpus = pretraining_corpus(config.vocab_size, settings.corpus_size, config.seed)
        backbone = pretrain(config.backbone_config(), corpus, settings.steps, config.seed,
                            settings=settings, checkpoint_path=args.out)
        print(text_static.CHECKPOINT_WRITTEN.format(path=args.out, checksum=backbone.checksum()))
        return 0
