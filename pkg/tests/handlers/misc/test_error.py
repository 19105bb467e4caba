"""Tests for error handler."""
import pytest
from unittest.mock import patch

from dptlab.app.errors import ConfigurationError, NumericalError, ParseError, UsageError
from dptlab.handlers.misc.error import EXIT_RUNTIME, EXIT_USAGE, command_error_handler


@pytest.mark.unit
@pytest.mark.parametrize('error', [UsageError('missing --out'), ConfigurationError('c must be >= 1')])
def test_usage_errors_exit_one(error):
    """Test that user mistakes map to exit code 1 without a traceback or report."""
    with patch('dptlab.handlers.misc.error.logger') as mock_logger, \
            patch('dptlab.handlers.misc.error.sentry_sdk') as mock_sentry:
        code = command_error_handler(error, 'train')

        assert code == EXIT_USAGE == 1
        assert mock_logger.error.call_count == 1
        assert 'exc_info' not in mock_logger.error.call_args.kwargs
        mock_sentry.capture_exception.assert_not_called()


@pytest.mark.unit
@pytest.mark.parametrize('error', [NumericalError('loss is nan'), ParseError('bad line'), ValueError('boom')])
def test_runtime_errors_exit_two(error):
    """Test that runtime failures map to exit code 2 and are reported."""
    with patch('dptlab.handlers.misc.error.logger') as mock_logger, \
            patch('dptlab.handlers.misc.error.sentry_sdk') as mock_sentry:
        code = command_error_handler(error, 'sweep')

        assert code == EXIT_RUNTIME == 2
        mock_sentry.capture_exception.assert_called_once_with(error)
        log_message = str(mock_logger.error.call_args_list[0])
        assert type(error).__name__ in log_message
        assert str(error) in log_message
        assert 'sweep' in log_message


@pytest.mark.unit
def test_sentry_failure_does_not_raise():
    """Test that a failing sentry report is logged and swallowed."""
    with patch('dptlab.handlers.misc.error.logger') as mock_logger, \
            patch('dptlab.handlers.misc.error.sentry_sdk') as mock_sentry:
        mock_sentry.capture_exception.side_effect = RuntimeError('network down')

        code = command_error_handler(ValueError('boom'), 'train')

        assert code == EXIT_RUNTIME
        calls = [str(call) for call in mock_logger.error.call_args_list]
        assert any('Failed to report error to sentry' in call for call in calls)
