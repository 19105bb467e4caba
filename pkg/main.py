import logging
import sys
from os import getenv
from typing import Optional, Sequence

import sentry_sdk
from dotenv import load_dotenv

from dptlab.dispatcher import parse_command
from dptlab.handlers.misc.error import command_error_handler

# Load configs before reading the environment
load_dotenv()
LOG_LEVEL = getenv('LOG_LEVEL', 'INFO').upper()

# Setup logging
logging.basicConfig(
    level=LOG_LEVEL,
    format='%(asctime)s - %(name)s - %(levelname)-8s - %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)  # Логи в stderr, результаты в stdout и файлы
    ]
)
logger = logging.getLogger()

# Наши логи на уровне из LOG_LEVEL
logging.getLogger('dptlab').setLevel(LOG_LEVEL)
logging.getLogger('__main__').setLevel(LOG_LEVEL)

sentry_sdk.init(
    dsn=getenv("SENTRY_DSN", ""),
    traces_sample_rate=1.0,
)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse the command line, run the command and return its exit code."""
    argv = sys.argv[1:] if argv is None else argv
    command = argv[0] if argv else ''
    try:
        args = parse_command(argv)
        logger.info(f"Running command {args.command}")
        return args.handler(args)
    except (KeyboardInterrupt, SystemExit):
        raise
    except Exception as error:
        return command_error_handler(error, command)


if __name__ == '__main__':
    sys.exit(main())
