"""Tests for prompt parameterizations."""
import numpy as np
import pytest

from dptlab.app.errors import ConfigurationError
from dptlab.handlers.autodiff import ops
from dptlab.handlers.autodiff.gradcheck import grad_check_many
from dptlab.handlers.autodiff.tensor import Tensor, backward
from dptlab.handlers.prompts.models import DecomposedPrompt, RankProbePrompt, ResidualPrompt, VanillaPrompt
from dptlab.handlers.prompts.prompt_service import init_prompt


def _weighted_sum(param, seed):
    weights = ops.constant(np.random.default_rng(seed + 1000).normal(size=(param.e, param.c)))
    return ops.sum_all(ops.multiply(param.materialize(), weights))


@pytest.mark.unit
class TestMaterialize:
    """Tests for materialize()."""

    def test_decomposed_outer_product(self):
        """Test A=[[1],[2]], B=[[3,4]]."""
        param = DecomposedPrompt(Tensor([[1.0], [2.0]]), Tensor([[3.0, 4.0]]))
        np.testing.assert_array_equal(param.materialize().data, [[3.0, 4.0], [6.0, 8.0]])

    def test_decomposed_zero_b(self):
        """Test that B = 0 gives the zero matrix."""
        param = DecomposedPrompt(Tensor(np.ones((3, 2))), Tensor(np.zeros((2, 4))))
        np.testing.assert_array_equal(param.materialize().data, np.zeros((3, 4)))

    def test_rank_probe_negative_sigma(self):
        """Test that an all-negative diagonal gives the zero prompt."""
        rng = np.random.default_rng(0)
        param = RankProbePrompt(Tensor(rng.normal(size=(4, 4))), Tensor(-np.ones(3)), Tensor(rng.normal(size=(3, 3))))
        np.testing.assert_array_equal(param.materialize().data, np.zeros((4, 3)))

    def test_rank_probe_sigma_matrix(self):
        """Test the diagonal embedding of sigma."""
        param = RankProbePrompt(Tensor(np.eye(3)), Tensor([2.0, -1.0]), Tensor(np.eye(2)))
        np.testing.assert_array_equal(param.sigma_matrix().data, [[2.0, 0.0], [0.0, -1.0], [0.0, 0.0]])
        np.testing.assert_array_equal(param.materialize().data, [[2.0, 0.0], [0.0, 0.0], [0.0, 0.0]])

    def test_residual_per_column(self):
        """Test the residual block is applied to each column independently."""
        param = init_prompt('residual', 6, 3, h=5, seed=2, init='gaussian')
        full = param.materialize().data
        for j in range(3):
            column = param.p.data[:, j]
            hidden = np.maximum(param.down.data @ column + param.down_bias.data, 0.0)
            out = param.up.data @ hidden + param.up_bias.data
            normed = (out - out.mean()) / np.sqrt(out.var() + 1e-5) * param.ln_gain.data + param.ln_bias.data
            np.testing.assert_allclose(full[:, j], normed + column, atol=1e-12)

    @pytest.mark.parametrize('kind', ['vanilla', 'dpt', 'residual', 'rank-probe'])
    def test_pure(self, kind):
        """Test two materializations without updates are identical."""
        param = init_prompt(kind, 6, 4, b=2, h=3, seed=1, init='gaussian')
        np.testing.assert_array_equal(param.materialize().data, param.materialize().data)
        assert param.materialize().shape == [6, 4]


@pytest.mark.unit
class TestGradients:
    """Tests for gradient flow into the prompt parameters."""

    @pytest.mark.parametrize('kind', ['vanilla', 'dpt', 'residual', 'rank-probe'])
    def test_every_parameter_receives_gradient(self, kind):
        """Test gradient-flow completeness after one backward pass."""
        param = init_prompt(kind, 6, 4, b=2, h=3, seed=0, init='gaussian')
        backward(_weighted_sum(param, 0))
        missing = [name for name, t in param.parameters().items() if t.grad is None]
        assert missing == []

    @pytest.mark.parametrize('kind', ['dpt', 'residual', 'rank-probe'])
    @pytest.mark.parametrize('seed', range(4))
    def test_grad_check(self, kind, seed):
        """Test analytic gradients against finite differences."""
        param = init_prompt(kind, 5, 3, b=2, h=4, seed=seed, init='gaussian')
        if kind == 'rank-probe':
            rng = np.random.default_rng(seed)
            param.sigma_diag.data[:] = np.sign(rng.normal(size=3)) * rng.uniform(0.3, 1.5, size=3)
        if kind == 'residual':
            rng = np.random.default_rng(seed)
            param.down_bias.data[:] = rng.normal(size=4)
            param.ln_gain.data[:] = rng.uniform(0.5, 1.5, size=5)
        tensors = list(param.parameters().values())
        assert grad_check_many(lambda _: _weighted_sum(param, seed), tensors[0], tensors) < 1e-5


@pytest.mark.unit
class TestValidation:
    """Tests for shape validation."""

    def test_decomposed_bottleneck_mismatch(self):
        """Test A and B that do not share b."""
        with pytest.raises(ConfigurationError):
            DecomposedPrompt(Tensor(np.ones((3, 2))), Tensor(np.ones((3, 4))))

    def test_rank_probe_needs_c_le_e(self):
        """Test that c > e is rejected."""
        with pytest.raises(ConfigurationError):
            RankProbePrompt(Tensor(np.eye(2)), Tensor(np.ones(3)), Tensor(np.eye(3)))

    def test_residual_bias_shape(self):
        """Test a residual bias of the wrong length."""
        with pytest.raises(ConfigurationError, match='up_bias'):
            ResidualPrompt(Tensor(np.ones((3, 2))), Tensor(np.ones((4, 3))), Tensor(np.zeros(4)),
                           Tensor(np.ones((3, 4))), Tensor(np.zeros(2)), Tensor(np.ones(3)), Tensor(np.zeros(3)))

    def test_vanilla_needs_matrix(self):
        """Test a 1-D prompt."""
        with pytest.raises(ConfigurationError):
            VanillaPrompt(Tensor(np.ones(3)))

    def test_parameters_require_grad(self):
        """Test that construction marks every tensor trainable and named."""
        param = DecomposedPrompt(Tensor(np.ones((3, 2))), Tensor(np.ones((2, 4))))
        assert all(t.requires_grad for t in param.parameters().values())
        assert [t.name for t in param.parameters().values()] == ['A', 'B']
        assert param.trainable_count() == 3 * 2 + 2 * 4
        assert param.dims() == {'e': 3, 'c': 4, 'b': 2}
