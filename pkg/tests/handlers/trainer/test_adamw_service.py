"""Tests for the AdamW optimizer."""
import numpy as np
import pytest

from dptlab.handlers.autodiff import ops
from dptlab.handlers.autodiff.tensor import Tensor, backward
from dptlab.handlers.trainer.adamw_service import AdamWState, adamw_step
from dptlab.handlers.trainer.config import TrainConfig


@pytest.mark.unit
class TestAdamWStep:
    """Tests for adamw_step."""

    def test_first_step_moves_by_lr(self):
        """Test bias correction cancels at t=1."""
        p = Tensor([1.0], requires_grad=True)
        adamw_step([p], AdamWState(), TrainConfig(lr=0.1, weight_decay=0.0), grads=[np.array([1.0])])
        assert p.data[0] - 1.0 == pytest.approx(-0.1, rel=1e-6)

    def test_decay_is_decoupled(self):
        """Test that with zero gradient p shrinks by exactly lr*wd*p."""
        p0 = np.array([2.0, -4.0])
        p = Tensor(p0, requires_grad=True)
        adamw_step([p], AdamWState(), TrainConfig(lr=0.1, weight_decay=0.01), grads=[np.zeros(2)])
        np.testing.assert_allclose(p.data, p0 - 0.1 * 0.01 * p0, rtol=1e-15)

    def test_quadratic_converges(self):
        """Test 100 steps on (p-3)^2 end within 0.05 of 3."""
        p = Tensor([0.0], requires_grad=True)
        state = AdamWState()
        config = TrainConfig(lr=0.1, weight_decay=0.0)
        for _ in range(100):
            p.zero_grad()
            diff = ops.subtract(p, 3.0)
            backward(ops.sum_all(ops.multiply(diff, diff)))
            adamw_step([p], state, config)
        assert abs(p.data[0] - 3.0) < 0.05
        assert state.step == 100

    def test_missing_grad_counts_as_zero(self):
        """Test a parameter without gradient only decays."""
        p = Tensor([1.0], requires_grad=True)
        adamw_step([p], AdamWState(), TrainConfig(lr=0.5, weight_decay=0.0))
        assert p.data[0] == 1.0

    def test_state_only_for_passed_tensors(self):
        """Test that moments exist only for the trainable tensors."""
        trainable = [Tensor(np.ones(3), requires_grad=True), Tensor(np.ones((2, 2)), requires_grad=True)]
        frozen = Tensor(np.ones(4))
        state = AdamWState()
        adamw_step(trainable, state, TrainConfig(), grads=[np.ones(3), np.ones((2, 2))])
        assert state.tracked() == 2
        assert frozen.node_id not in state.m

    def test_gradient_shape_mismatch(self):
        """Test a gradient of the wrong shape."""
        with pytest.raises(ValueError):
            adamw_step([Tensor(np.ones(3))], AdamWState(), TrainConfig(), grads=[np.ones(2)])
