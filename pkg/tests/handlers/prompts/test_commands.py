"""Tests for the count-params and compress commands."""
from argparse import Namespace

import numpy as np

import pytest

from dptlab.app.errors import ConfigurationError, UsageError
from dptlab.app.storage import load_tensors
from dptlab.handlers.experiment import text_static
from dptlab.handlers.probe.svd_service import numerical_rank
from dptlab.handlers.prompts.commands import cmd_compress, cmd_count_params, count_rows
from dptlab.handlers.prompts.prompt_service import (
    export_prompt, fit_decomposed, init_prompt, load_vanilla_prompt, prompt_file_name,
)


def _args(**overrides):
    values = dict(profile=None, method=None, e=None, c=None, b=None, h=None, verify=False)
    values.update(overrides)
    return Namespace(**values)


@pytest.mark.unit
def test_explicit_dimensions_print_count(capsys):
    """Test --method dpt --e 1024 --c 100 --b 10."""
    code = cmd_count_params(_args(method='dpt', e=1024, c=100, b=10))
    lines = capsys.readouterr().out.splitlines()
    assert code == 0
    assert lines[0] == text_static.COUNT_TABLE_HEADER
    assert lines[1] == 'desk,dpt,1024,100,10,64,11240,11K,11K,11.2K'


@pytest.mark.unit
def test_all_profiles():
    """Test the model-scale table rows."""
    rows = count_rows(_args(profile='all'))
    counts = {(row['profile'], row['method']): row['count'] for row in rows}
    assert counts[('t5-small', 'vanilla')] == 51200
    assert counts[('t5-base', 'dpt')] == 8680
    assert counts[('t5-large', 'residual')] == 925072
    assert counts[('t5-base', 'rank-probe')] == 768 * 768 + 100 + 100 * 100


@pytest.mark.unit
def test_rank_probe_skipped_when_prompt_longer_than_e():
    """Test that rank-probe rows are dropped for c > e."""
    rows = count_rows(_args(e=8, c=16))
    assert 'rank-probe' not in {row['method'] for row in rows}
    assert len(rows) == 3


@pytest.mark.unit
def test_verify_desk(capsys):
    """Test formula and enumeration agree for the desk profile."""
    assert cmd_count_params(_args(verify=True)) == 0
    assert text_static.COUNT_VERIFY_OK in capsys.readouterr().out


@pytest.mark.unit
def test_verify_mismatch_exit_code(capsys, mocker):
    """Test that a disagreement is reported with exit code 2."""
    mocker.patch('dptlab.handlers.prompts.commands.verify_param_count', return_value=False)
    assert cmd_count_params(_args(method='vanilla', verify=True)) == 2
    assert 'desk/vanilla' in capsys.readouterr().out


@pytest.mark.unit
@pytest.mark.parametrize('overrides', [{'method': 'full-ft'}, {'profile': 't5-xxl'}])
def test_usage_errors(overrides):
    """Test unknown methods and profiles."""
    with pytest.raises(UsageError):
        count_rows(_args(**overrides))


@pytest.mark.unit
def test_verify_random_dimensions(capsys):
    """Test --verify on 20 random explicit dimension tuples."""
    rng = np.random.default_rng(4)
    for _ in range(20):
        e = int(rng.integers(2, 48))
        c = int(rng.integers(1, e + 1))
        b = int(rng.integers(1, min(e, c) + 1))
        h = int(rng.integers(1, 32))
        assert cmd_count_params(_args(e=e, c=c, b=b, h=h, verify=True)) == 0
        assert text_static.COUNT_VERIFY_OK in capsys.readouterr().out


def _compress_args(**overrides):
    values = dict(prompt=None, b=None, out=None)
    values.update(overrides)
    return Namespace(**values)


@pytest.mark.unit
class TestCompress:
    """Tests for the compress command."""

    def _stored(self, tmp_path, e=6, c=4):
        param = init_prompt('vanilla', e, c, seed=0, init='gaussian')
        path = str(tmp_path / prompt_file_name('vanilla', e, c, None, 0))
        export_prompt(param, path)
        return param, path

    def test_writes_rank_b_product(self, tmp_path, capsys):
        """Test that the written prompt is the rank-b fit of the source."""
        param, path = self._stored(tmp_path)
        out = str(tmp_path / 'compressed.prompt')
        assert cmd_compress(_compress_args(prompt=path, b=2, out=out)) == 0
        compressed = load_vanilla_prompt(out)
        np.testing.assert_allclose(compressed.p.data, fit_decomposed(param.p.data, 2).materialize().data, atol=1e-12)
        assert numerical_rank(compressed.p) == 2
        printed = capsys.readouterr().out
        assert f'prompt={out} b=2 trainable_params={6 * 2 + 2 * 4}' in printed

    def test_header_records_source(self, tmp_path):
        """Test the source path and residual in the stored metadata."""
        _, path = self._stored(tmp_path)
        out = str(tmp_path / 'compressed.prompt')
        cmd_compress(_compress_args(prompt=path, b=4, out=out))
        meta, _ = load_tensors(out)
        assert meta['source'] == path
        assert float(meta['relative_residual']) < 1e-8

    @pytest.mark.parametrize('missing', ['prompt', 'b', 'out'])
    def test_missing_arguments(self, tmp_path, missing):
        """Test that each argument is required."""
        values = {'prompt': str(tmp_path / 'p.prompt'), 'b': 2, 'out': str(tmp_path / 'o.prompt')}
        values[missing] = None
        with pytest.raises(UsageError):
            cmd_compress(_compress_args(**values))

    def test_bottleneck_too_large(self, tmp_path):
        """Test b above min(e, c)."""
        _, path = self._stored(tmp_path)
        with pytest.raises(ConfigurationError):
            cmd_compress(_compress_args(prompt=path, b=5, out=str(tmp_path / 'o.prompt')))
