"""Tests for the sweep and few-shot commands."""
import pytest

from dptlab.app.errors import UsageError
from dptlab.dispatcher import parse_command
from dptlab.handlers.experiment.config import parse_config_text


def _run(argv):
    args = parse_command(argv)
    return args.handler(args)


def _data_lines(path):
    return [line for line in path.read_text(encoding='utf-8').splitlines() if not line.startswith('#')]


@pytest.mark.unit
class TestSweepCommand:
    """Tests for cmd_sweep."""

    def test_field_sweep(self, tiny_checkpoint, tmp_path, capsys):
        """Test a two-value sweep over c for two methods with one seed."""
        _, flags = tiny_checkpoint
        out = tmp_path / 'sweep.csv'

        code = _run(['sweep', '--param', 'c', '--values', '2,4', '--methods', 'vanilla,dpt', '--seeds', '0',
                     '--out', str(out)] + flags)

        assert code == 0
        assert 'points=4' in capsys.readouterr().out
        header = parse_config_text(out.read_text(encoding='utf-8'))
        assert header['sweep'] == 'c'
        assert header['sweep_values'] == '2,4'
        assert header['methods'] == 'vanilla,dpt'
        rows = _data_lines(out)
        assert rows[0] == 'param,value,method,mean,min,max,std,seeds,trainable_params'
        assert [row.split(',')[:3] for row in rows[1:]] == [
            ['c', '2', 'vanilla'], ['c', '2', 'dpt'], ['c', '4', 'vanilla'], ['c', '4', 'dpt'],
        ]

    def test_preset_with_values(self, tiny_checkpoint, tmp_path):
        """Test that a preset keeps its fixed fields when values are overridden."""
        _, flags = tiny_checkpoint
        out = tmp_path / 'short.csv'

        _run(['sweep', '--param', 'shortprompt', '--values', '3', '--methods', 'dpt', '--seeds', '0',
              '--out', str(out)] + flags)

        assert _data_lines(out)[1].endswith(',1,' + str(8 * 2 + 2 * 3))

    @pytest.mark.parametrize('argv', [
        ['sweep', '--param', 'c', '--values', '2'],
        ['sweep', '--out', 'x.csv'],
        ['sweep', '--param', 'lr', '--values', '1', '--out', 'x.csv'],
        ['sweep', '--param', 'c', '--values', '2', '--methods', 'lora', '--out', 'x.csv'],
        ['sweep', '--param', 'c', '--values', '2', '--workers', '0', '--out', 'x.csv'],
    ])
    def test_usage_errors(self, argv):
        """Test missing or invalid sweep flags."""
        with pytest.raises(UsageError):
            _run(argv)

    def test_rerun_from_header_is_identical(self, tiny_checkpoint, tmp_path, capsys):
        """Test that --config pointing at a written sweep reproduces it byte for byte."""
        _, flags = tiny_checkpoint
        first = tmp_path / 'first.csv'
        second = tmp_path / 'second.csv'
        _run(['sweep', '--param', 'c', '--values', '2,4', '--methods', 'vanilla,full-ft', '--seeds', '0,1',
              '--out', str(first)] + flags)

        code = _run(['sweep', '--config', str(first), '--out', str(second)])

        assert code == 0
        assert 'points=4' in capsys.readouterr().out
        assert second.read_bytes() == first.read_bytes()

    def test_header_keeps_run_settings(self, tiny_checkpoint, tmp_path):
        """Test that lr stays unresolved and seeds and workers are recorded."""
        _, flags = tiny_checkpoint
        out = tmp_path / 'sweep.csv'
        _run(['sweep', '--param', 'c', '--values', '2', '--methods', 'vanilla,full-ft', '--seeds', '0,1',
              '--out', str(out)] + flags)

        header = parse_config_text(out.read_text(encoding='utf-8'))

        assert header['lr'] == ''
        assert header['seeds'] == '0,1'
        assert header['workers'] == '1'
        assert header['sweep_param'] == 'c'

    def test_flags_override_header(self, tiny_checkpoint, tmp_path):
        """Test that explicit flags win over the re-read header."""
        _, flags = tiny_checkpoint
        first = tmp_path / 'first.csv'
        second = tmp_path / 'second.csv'
        _run(['sweep', '--param', 'c', '--values', '2,4', '--methods', 'vanilla', '--seeds', '0',
              '--out', str(first)] + flags)

        _run(['sweep', '--config', str(first), '--values', '2', '--methods', 'dpt', '--out', str(second)])

        assert [row.split(',')[:3] for row in _data_lines(second)[1:]] == [['c', '2', 'dpt']]


@pytest.mark.unit
class TestFewShotCommand:
    """Tests for cmd_fewshot."""

    def test_runs_and_means(self, tiny_checkpoint, tmp_path, capsys):
        """Test both CSV sections for one k and two seeds."""
        _, flags = tiny_checkpoint
        out = tmp_path / 'fewshot.csv'

        code = _run(['fewshot', '--k', '4', '--seeds', '0,1', '--methods', 'vanilla,dpt', '--out', str(out)] + flags)

        assert code == 0
        assert 'groups=1' in capsys.readouterr().out
        lines = _data_lines(out)
        assert lines[0] == 'k,seed,method,accuracy,subset_sha256'
        runs = lines[1:5]
        assert [run.split(',')[:3] for run in runs] == [
            ['4', '0', 'vanilla'], ['4', '0', 'dpt'], ['4', '1', 'vanilla'], ['4', '1', 'dpt'],
        ]
        assert runs[0].split(',')[-1] == runs[1].split(',')[-1]
        assert lines[5:7] == ['', 'k,method,mean,min,max']
        assert [line.split(',')[:2] for line in lines[7:]] == [['4', 'vanilla'], ['4', 'dpt']]

    @pytest.mark.parametrize('k', ['0', 'two'])
    def test_bad_k(self, k, tmp_path):
        """Test invalid shot counts."""
        with pytest.raises(UsageError):
            _run(['fewshot', '--k', k, '--out', str(tmp_path / 'f.csv')])

    def test_missing_out(self):
        """Test fewshot without --out."""
        with pytest.raises(UsageError):
            _run(['fewshot'])

    def test_rerun_from_header_is_identical(self, tiny_checkpoint, tmp_path):
        """Test that --config pointing at a written few-shot file reproduces it byte for byte."""
        _, flags = tiny_checkpoint
        first = tmp_path / 'first.csv'
        second = tmp_path / 'second.csv'
        _run(['fewshot', '--k', '4', '--seeds', '0,1', '--methods', 'vanilla,full-ft', '--out', str(first)] + flags)

        code = _run(['fewshot', '--config', str(first), '--out', str(second)])

        assert code == 0
        header = parse_config_text(first.read_text(encoding='utf-8'))
        assert header['k'] == '4'
        assert header['lr'] == ''
        assert second.read_bytes() == first.read_bytes()
