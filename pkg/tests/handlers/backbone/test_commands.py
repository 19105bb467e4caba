"""Tests for the pretrain command."""
import pytest

from dptlab.app.errors import UsageError
from dptlab.dispatcher import parse_command
from dptlab.handlers.backbone.models import Backbone


@pytest.mark.unit
def test_pretrain_writes_checkpoint(tmp_path, capsys):
    """Test that pretrain saves a frozen checkpoint and prints its checksum."""
    out = tmp_path / 'backbone.ckpt'
    args = parse_command(['pretrain', '--e', '8', '--n-layers', '1', '--ffn-dim', '16', '--vocab-size', '24',
                          '--max-len', '64', '--pretrain-steps', '2', '--pretrain-batch-size', '2',
                          '--corpus-size', '16', '--out', str(out)])

    assert args.handler(args) == 0

    backbone = Backbone.load(str(out))
    assert backbone.config.e == 8
    assert capsys.readouterr().out.strip() == f'checkpoint={out} checksum={backbone.checksum()}'


@pytest.mark.unit
def test_pretrain_needs_out():
    """Test pretrain without --out."""
    args = parse_command(['pretrain'])
    with pytest.raises(UsageError):
        args.handler(args)
