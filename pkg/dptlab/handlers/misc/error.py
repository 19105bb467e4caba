import logging

import sentry_sdk

from dptlab.app.errors import ConfigurationError, UsageError

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


def command_error_handler(error: BaseException, command: str) -> int:
    """
    Handle errors that escape a command handler.

    Logs the error with its type and the command name, reports it to sentry
    (a no-op when SENTRY_DSN is empty) and maps it to a process exit code.
    Never raises.
    """
    error_type = type(error).__name__
    error_msg = str(error)
    is_usage = isinstance(error, (UsageError, ConfigurationError))

    if is_usage:
        # Ошибки пользователя: без трейсбека
        logger.error(f"Usage error in command {command!r}: {error_type}: {error_msg}")
    else:
        logger.error(
            f"Exception while running a command. "
            f"Error type: {error_type}, "
            f"Error message: {error_msg}, "
            f"Command: {command}",
            exc_info=error
        )
        try:
            sentry_sdk.capture_exception(error)
        except Exception as report_error:
            logger.error(f"Failed to report error to sentry: {type(report_error).__name__}: {report_error}")

    return EXIT_USAGE if is_usage else EXIT_RUNTIME
