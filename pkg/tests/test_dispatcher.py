"""Tests for command parsing and process exit codes."""
import pytest

from dptlab.app.errors import UsageError
from dptlab.dispatcher import parse_command
from main import main


@pytest.mark.unit
class TestParseCommand:
    """Tests for parse_command()."""

    def test_config_flags(self):
        """Test that every config field has a flag and unset flags stay None."""
        args = parse_command(['train', '--method', 'dpt', '--sigma-t', '0.5', '--out', 'run.csv'])
        assert args.command == 'train'
        assert args.method == 'dpt'
        assert args.sigma_t == 0.5
        assert args.c is None
        assert args.lr is None

    @pytest.mark.parametrize('command, handler', [('dataset', 'cmd_dataset'), ('compress', 'cmd_compress')])
    def test_file_commands_registered(self, command, handler):
        """Test the dataset and compress commands resolve to their handlers."""
        args = parse_command([command, '--out', 'x'])
        assert args.handler.__name__ == handler
        assert args.out == 'x'

    def test_workers_unset_by_default(self):
        """Test --workers stays None so a config file can supply it."""
        assert parse_command(['sweep']).workers is None

    @pytest.mark.parametrize('argv', [[], ['bogus'], ['train', '--c', 'many'], ['count-params', '--profile', 'xl']])
    def test_usage_errors(self, argv):
        """Test that argparse failures become usage errors instead of exiting."""
        with pytest.raises(UsageError):
            parse_command(argv)


@pytest.mark.unit
class TestMain:
    """Tests for main() exit codes."""

    def test_success(self, capsys):
        """Test a successful command exits 0."""
        assert main(['count-params', '--method', 'dpt', '--e', '1024', '--c', '100', '--b', '10']) == 0
        assert '11240' in capsys.readouterr().out

    @pytest.mark.parametrize('argv', [
        [], ['train'], ['train', '--method', 'lora', '--out', 'x.csv'], ['compress', '--out', 'x.prompt'],
    ])
    def test_usage_exit_code(self, argv):
        """Test usage and configuration errors exit 1."""
        assert main(argv) == 1

    def test_runtime_exit_code(self, mocker, tiny_checkpoint, tmp_path):
        """Test an unexpected failure inside a command exits 2."""
        _, flags = tiny_checkpoint
        mocker.patch('dptlab.handlers.trainer.commands.run_experiment', side_effect=RuntimeError('boom'))
        mocker.patch('dptlab.handlers.misc.error.sentry_sdk')
        assert main(['train', '--out', str(tmp_path / 'run.csv')] + flags) == 2
