"""Tests for trainable parameter counting."""
import numpy as np
import pytest

from dptlab.app.errors import ConfigurationError
from dptlab.handlers.prompts.count_service import (
    enumerated_param_count, trainable_param_count, verify_param_count,
)


@pytest.mark.unit
@pytest.mark.parametrize('kind, e, c, b, h, expected', [
    ('vanilla', 512, 100, None, None, 51200),
    ('vanilla', 768, 100, None, None, 76800),
    ('vanilla', 1024, 100, None, None, 102400),
    ('dpt', 512, 100, 10, None, 6120),
    ('dpt', 768, 100, 10, None, 8680),
    ('dpt', 1024, 100, 10, None, 11240),
    ('residual', 512, 100, None, 400, 462736),
    ('residual', 768, 100, None, 400, 693904),
    ('residual', 1024, 100, None, 400, 925072),
    ('residual', 512, 10, None, 400, 416656),
    ('residual', 768, 10, None, 400, 624784),
    ('residual', 1024, 10, None, 400, 832912),
])
def test_reported_counts(kind, e, c, b, h, expected):
    """Test the trainable parameter counts at model scale."""
    assert trainable_param_count(kind, e, c, b=b, h=h) == expected


@pytest.mark.unit
@pytest.mark.parametrize('kind, e, c, b, h', [
    ('vanilla', 32, 16, None, None),
    ('dpt', 32, 16, 4, None),
    ('residual', 32, 16, None, 64),
    ('rank-probe', 32, 16, None, None),
    ('residual', 512, 10, None, 400),
])
def test_formula_matches_enumeration(kind, e, c, b, h):
    """Test the formula against the sizes of the constructed tensors."""
    assert enumerated_param_count(kind, e, c, b=b, h=h) == trainable_param_count(kind, e, c, b=b, h=h)
    assert verify_param_count(kind, e, c, b=b, h=h)


@pytest.mark.unit
def test_rank_probe_count():
    """Test the rank-probe count e^2 + c + c^2."""
    assert trainable_param_count('rank-probe', 32, 16) == 32 * 32 + 16 + 16 * 16


@pytest.mark.unit
@pytest.mark.parametrize('kind, kwargs', [
    ('dpt', {}),
    ('residual', {'h': 0}),
    ('rank-probe', {'e': 4, 'c': 8}),
    ('prefix', {}),
])
def test_invalid(kind, kwargs):
    """Test missing bottlenecks, c > e for the probe and unknown kinds."""
    dims = {'e': 8, 'c': 4}
    dims.update(kwargs)
    with pytest.raises(ConfigurationError):
        trainable_param_count(kind, **dims)


@pytest.mark.unit
@pytest.mark.parametrize('e', [512, 768, 1024])
def test_dpt_ratio_decreases_with_length(e):
    """Test the dpt/vanilla count ratio strictly falls as c grows."""
    ratios = [trainable_param_count('dpt', e, c, b=10) / trainable_param_count('vanilla', e, c) for c in (20, 100, 200)]
    assert ratios[0] > ratios[1] > ratios[2]


@pytest.mark.unit
def test_formula_matches_enumeration_on_random_dimensions():
    """Test formula and enumeration agree on 20 random dimension tuples for every kind."""
    rng = np.random.default_rng(2)
    for _ in range(20):
        e = int(rng.integers(2, 40))
        c = int(rng.integers(1, e + 1))
        b = int(rng.integers(1, min(e, c) + 1))
        h = int(rng.integers(1, 30))
        for kind in ('vanilla', 'dpt', 'residual', 'rank-probe'):
            assert verify_param_count(kind, e, c, b=b, h=h)
