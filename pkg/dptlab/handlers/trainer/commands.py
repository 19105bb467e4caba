import logging
import os
from argparse import Namespace

import sentry_sdk

from dptlab.app.errors import UsageError
from dptlab.handlers.experiment import text_static
from dptlab.handlers.experiment.config import build_config
from dptlab.handlers.experiment.sweep_service import check_backbone, load_backbone, run_experiment
from dptlab.handlers.probe.models import probe_csv
from dptlab.handlers.prompts.count_service import trainable_param_count
from dptlab.handlers.prompts.prompt_service import export_product, export_prompt, prompt_file_name
from dptlab.utils import atomic_write_text

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)


def probe_path_for(out: str) -> str:
    return os.path.splitext(out)[0] + '.probe.csv'


def cmd_train(args: Namespace) -> int:
    """
    Обучить один метод и записать RunLog (CSV + JSON).

    Рядом сохраняется промпт (для dpt произведение A·B, для vanilla P_emb),
    для rank-probe: CSV пробника.
    """
    with sentry_sdk.start_transaction(op='train_cmd', name='Train prompt command'):
        if not getattr(args, 'out', None):
            raise UsageError(text_static.MISSING_OUT.format(command='train'))
        config = build_config(vars(args), getattr(args, 'config', None)).resolve()
        if config.method != 'full-ft':
            count = trainable_param_count(config.method, config.e, config.c, b=config.b, h=config.h)
            print(text_static.TRAINABLE_PARAMS_LINE.format(count=count), flush=True)
        if not os.path.exists(config.checkpoint):
            raise UsageError(f"Checkpoint not found: {config.checkpoint} (run pretrain first)")
        backbone = load_backbone(config.checkpoint)
        check_backbone(backbone, config)
        if config.method == 'full-ft':
            print(text_static.TRAINABLE_PARAMS_LINE.format(count=backbone.param_count()), flush=True)

        result = run_experiment(config, backbone)
        header = config.header()
        result.runlog.save(args.out, header)
        print(text_static.RUNLOG_WRITTEN.format(path=args.out, accuracy=result.runlog.final_accuracy))

        if config.method == 'dpt':
            prompt_path = os.path.join(os.path.dirname(os.path.abspath(args.out)),
                                       prompt_file_name(config.method, config.e, config.c, config.b, config.seed))
            export_product(result.param, prompt_path, header)
            print(text_static.PROMPT_EXPORTED.format(path=prompt_path))
        if config.method == 'vanilla':
            prompt_path = os.path.join(os.path.dirname(os.path.abspath(args.out)),
                                       prompt_file_name(config.method, config.e, config.c, None, config.seed))
            export_prompt(result.param, prompt_path, header)
            print(text_static.PROMPT_EXPORTED.format(path=prompt_path))
        if config.method == 'rank-probe':
            probe_path = probe_path_for(args.out)
            atomic_write_text(probe_path, probe_csv(result.probe_records, header))
            print(text_static.PROBE_WRITTEN.format(path=probe_path))

        if result.runlog.aborted:
            logger.error(f"Training aborted: {result.runlog.abort_reason}")
            return 2
        return 0
