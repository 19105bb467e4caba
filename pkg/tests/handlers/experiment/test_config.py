"""Tests for experiment configuration."""
import json
import logging

import pytest

from dptlab.app.errors import ConfigurationError, UsageError
from dptlab.handlers.experiment.config import (
    CONFIG_PATH_ENV, ExperimentConfig, build_config, config_file_values, load_config_file, merge, parse_config_text,
)
from dptlab.handlers.trainer.config import FULL_FT_LR, PROMPT_LR


@pytest.fixture
def text_config(tmp_path):
    path = tmp_path / 'lab.conf'
    path.write_text("# desk run\nmethod = dpt\nc = 8\nb = 2\n", encoding='utf-8')
    return str(path)


@pytest.fixture(autouse=True)
def no_env_config(monkeypatch):
    monkeypatch.delenv(CONFIG_PATH_ENV, raising=False)


@pytest.mark.unit
def test_defaults_are_desk_profile():
    """Test ExperimentConfig defaults."""
    config = ExperimentConfig()
    assert (config.e, config.c, config.b, config.h) == (32, 16, 4, 64)
    assert config.method == 'vanilla'
    assert config.lr is None


@pytest.mark.unit
class TestMerge:
    """Tests for merge() and value coercion."""

    def test_strings_are_coerced(self):
        """Test that text values take the field types."""
        config = merge(ExperimentConfig(), {'c': '8', 'sigma-t': '0.5', 'method': 'dpt'})
        assert config.c == 8
        assert config.sigma_t == 0.5
        assert config.method == 'dpt'

    def test_unknown_key_ignored(self, caplog):
        """Test that unknown keys are logged and skipped."""
        config = merge(ExperimentConfig(), {'colour': 'red'})
        assert config == ExperimentConfig()
        assert 'colour' in caplog.text

    @pytest.mark.parametrize('key, value', [('c', 'many'), ('c', 2.5), ('lr', 'fast')])
    def test_bad_values(self, key, value):
        """Test values that do not fit the field type."""
        with pytest.raises(ConfigurationError):
            merge(ExperimentConfig(), {key: value})

    def test_empty_lr_means_default(self):
        """Test an empty lr string resolves per method."""
        assert merge(ExperimentConfig(), {'lr': ''}).lr is None

    def test_command_keys_skipped_silently(self, caplog):
        """Test that sweep and few-shot settings in a header are not config fields and not warned about."""
        values = {'sweep': 'c', 'sweep_values': '2,4', 'methods': 'dpt', 'seeds': '0', 'workers': '2', 'k': '8'}
        with caplog.at_level(logging.WARNING):
            config = merge(ExperimentConfig(), values)
        assert config == ExperimentConfig()
        assert 'Ignoring' not in caplog.text


@pytest.mark.unit
class TestParseConfigText:
    """Tests for parse_config_text()."""

    def test_key_value_lines(self):
        """Test plain key = value text with comments."""
        assert parse_config_text("# comment\nmethod = dpt\n\nc=8\n") == {'method': 'dpt', 'c': '8'}

    def test_csv_header(self):
        """Test that a CSV header is read and data lines stop the parse."""
        text = "# c = 16\n# method = residual\nstep,loss\n1,0.5\nb = 3\n"
        assert parse_config_text(text) == {'c': '16', 'method': 'residual'}


@pytest.mark.unit
class TestBuildConfig:
    """Tests for build_config() precedence."""

    def test_flags_override_file(self, text_config):
        """Test defaults < file < flags."""
        config = build_config({'c': 12, 'b': None}, text_config)
        assert config.method == 'dpt'
        assert config.c == 12
        assert config.b == 2

    def test_environment_path(self, text_config, monkeypatch):
        """Test the config path from the environment."""
        monkeypatch.setenv(CONFIG_PATH_ENV, text_config)
        assert build_config({}).method == 'dpt'

    def test_missing_environment_file_uses_defaults(self, tmp_path, monkeypatch):
        """Test a dangling environment path."""
        monkeypatch.setenv(CONFIG_PATH_ENV, str(tmp_path / 'absent.conf'))
        assert build_config({}) == ExperimentConfig()

    def test_missing_explicit_file(self, tmp_path):
        """Test that a missing --config file is a usage error."""
        with pytest.raises(UsageError):
            build_config({}, str(tmp_path / 'absent.conf'))

    def test_json_file(self, tmp_path):
        """Test a JSON config file."""
        path = tmp_path / 'lab.json'
        path.write_text(json.dumps({'method': 'residual', 'h': 32}), encoding='utf-8')
        config = build_config({}, str(path))
        assert (config.method, config.h) == ('residual', 32)

    def test_json_must_be_object(self, tmp_path):
        """Test a JSON list."""
        path = tmp_path / 'lab.json'
        path.write_text('[1, 2]', encoding='utf-8')
        with pytest.raises(ConfigurationError):
            load_config_file(str(path))

    def test_run_csv_as_config(self, tmp_path):
        """Test that a written run CSV reproduces its configuration."""
        original = ExperimentConfig(method='dpt', c=8, b=2, seed=3).resolve()
        path = tmp_path / 'run.csv'
        path.write_text(''.join(f"# {k} = {v}\n" for k, v in original.header().items()) + "step,loss\n",
                        encoding='utf-8')
        assert build_config({}, str(path)) == original


@pytest.mark.unit
class TestResolve:
    """Tests for ExperimentConfig.resolve()."""

    def test_learning_rate_per_method(self):
        """Test the prompt and full fine-tune learning rates."""
        assert ExperimentConfig(method='dpt').resolve().lr == PROMPT_LR
        assert ExperimentConfig(method='full-ft').resolve().lr == FULL_FT_LR
        assert ExperimentConfig(method='dpt', lr=0.1).resolve().lr == 0.1

    def test_unknown_method(self):
        """Test an unregistered method."""
        with pytest.raises(ConfigurationError):
            ExperimentConfig(method='lora').resolve()

    def test_rank_probe_needs_short_prompt(self):
        """Test rank-probe with c > e."""
        with pytest.raises(ConfigurationError):
            ExperimentConfig(method='rank-probe', c=40, e=32).resolve()

    @pytest.mark.parametrize('field', ['c', 'b', 'h', 'probe_every'])
    def test_positive_sizes(self, field):
        """Test sizes below one."""
        with pytest.raises(ConfigurationError):
            ExperimentConfig(**{field: 0}).resolve()

    def test_unknown_task(self):
        """Test a task missing from the registry."""
        with pytest.raises(ConfigurationError):
            ExperimentConfig(task='sorting').resolve()

    def test_header_sorted_without_time(self):
        """Test header keys are sorted and values are plain strings."""
        header = ExperimentConfig().resolve().header()
        assert list(header) == sorted(header)
        assert float(header['lr']) == PROMPT_LR
        assert header['c'] == '16'

    def test_dataset_files_go_together(self):
        """Test train_file without dev_file."""
        with pytest.raises(ConfigurationError, match='together'):
            ExperimentConfig(train_file='a.train.tsv').resolve()
        ExperimentConfig(train_file='a.train.tsv', dev_file='a.dev.tsv').resolve()

    @pytest.mark.parametrize('method', ['residual', 'rank-probe', 'full-ft'])
    def test_prompt_from_only_vanilla_or_dpt(self, method):
        """Test a stored prompt with a method that cannot start from it."""
        with pytest.raises(ConfigurationError):
            ExperimentConfig(method=method, prompt_from='v.prompt', c=8).resolve()

    def test_header_leaves_lr_unresolved(self):
        """Test an unset lr renders empty before resolve."""
        assert ExperimentConfig(method='full-ft').header()['lr'] == ''


@pytest.mark.unit
class TestConfigFileValues:
    """Tests for config_file_values()."""

    def test_no_file(self):
        """Test no --config and no environment path."""
        assert config_file_values() == {}

    def test_explicit_file(self, text_config):
        """Test raw values from --config, command keys included."""
        with open(text_config, 'a', encoding='utf-8') as f:
            f.write("seeds = 0,1\n")
        assert config_file_values(text_config) == {'method': 'dpt', 'c': '8', 'b': '2', 'seeds': '0,1'}

    def test_environment_file(self, text_config, monkeypatch):
        """Test the environment path."""
        monkeypatch.setenv(CONFIG_PATH_ENV, text_config)
        assert config_file_values()['method'] == 'dpt'

    def test_missing_explicit_file(self, tmp_path):
        """Test a --config path that does not exist."""
        with pytest.raises(UsageError):
            config_file_values(str(tmp_path / 'absent.conf'))

    def test_missing_environment_file(self, tmp_path, monkeypatch, caplog):
        """Test a missing environment path logs and returns nothing."""
        monkeypatch.setenv(CONFIG_PATH_ENV, str(tmp_path / 'absent.conf'))
        with caplog.at_level(logging.WARNING):
            assert config_file_values() == {}
        assert 'absent.conf' in caplog.text
