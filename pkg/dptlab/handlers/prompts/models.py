"""Параметризации мягкого промпта P_emb ∈ R^{e×c}.

Каждая параметризация хранит обучаемые тензоры θ_P и умеет материализовать
из них матрицу промпта. materialize() чистая: без обновлений параметров два
вызова дают одинаковые матрицы.
"""
from abc import ABC, abstractmethod
from collections import OrderedDict
from typing import Dict

from dptlab.app.errors import ConfigurationError
from dptlab.handlers.autodiff import ops
from dptlab.handlers.autodiff.tensor import Tensor

PROMPT_KINDS = ('vanilla', 'dpt', 'residual', 'rank-probe')


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigurationError(message)


class PromptParameterization(ABC):
    """Общий интерфейс параметризаций."""
    kind: str = ''

    def __init__(self, e: int, c: int):
        _require(e >= 1 and c >= 1, f"{self.kind}: e and c must be >= 1, got e={e}, c={c}")
        self.e = e
        self.c = c

    @abstractmethod
    def parameters(self) -> 'OrderedDict[str, Tensor]':
        """Обучаемые тензоры θ_P в фиксированном порядке."""

    @abstractmethod
    def materialize(self) -> Tensor:
        """Матрица промпта [e×c], записанная на ленту."""

    def trainable_count(self) -> int:
        """Число обучаемых скаляров перечислением тензоров."""
        return sum(t.size for t in self.parameters().values() if t.requires_grad)

    def dims(self) -> Dict[str, int]:
        return {'e': self.e, 'c': self.c}

    def _check_shapes(self, expected: Dict[str, tuple]) -> None:
        for name, tensor in self.parameters().items():
            _require(tuple(tensor.shape) == expected[name],
                     f"{self.kind}: {name} has shape {tensor.shape}, expected {list(expected[name])}")
            tensor.requires_grad = True
            if tensor.name is None:
                tensor.name = name

    def __repr__(self) -> str:
        dims = ', '.join(f"{k}={v}" for k, v in self.dims().items())
        return f"{type(self).__name__}({dims})"


class VanillaPrompt(PromptParameterization):
    """P_emb = P, ec обучаемых параметров."""
    kind = 'vanilla'

    def __init__(self, p: Tensor):
        _require(p.ndim == 2, f"vanilla: P must be 2-D, got {p.shape}")
        super().__init__(*p.shape)
        self.p = p
        self._check_shapes({'P': (self.e, self.c)})

    def parameters(self):
        return OrderedDict([('P', self.p)])

    def materialize(self) -> Tensor:
        return self.p


class DecomposedPrompt(PromptParameterization):
    """P_emb = A·B, A [e×b], B [b×c]; eb + bc обучаемых параметров, ранг ≤ b."""
    kind = 'dpt'

    def __init__(self, a: Tensor, b: Tensor):
        _require(a.ndim == 2 and b.ndim == 2 and a.shape[1] == b.shape[0],
                 f"dpt: A {a.shape} and B {b.shape} do not share the bottleneck dimension")
        super().__init__(a.shape[0], b.shape[1])
        self.bottleneck = a.shape[1]
        _require(self.bottleneck >= 1, "dpt: bottleneck b must be >= 1")
        self.a = a
        self.b = b
        self._check_shapes({'A': (self.e, self.bottleneck), 'B': (self.bottleneck, self.c)})

    def parameters(self):
        return OrderedDict([('A', self.a), ('B', self.b)])

    def materialize(self) -> Tensor:
        return ops.matmul(self.a, self.b)

    def dims(self):
        return {'e': self.e, 'c': self.c, 'b': self.bottleneck}


class ResidualPrompt(PromptParameterization):
    """
    P_emb[:, j] = LN(up·relu(down·P[:, j] + bd) + bu) + P[:, j] для каждого столбца j.

    Нормализация стоит после MLP и до residual-сложения.
    """
    kind = 'residual'

    def __init__(self, p: Tensor, down: Tensor, down_bias: Tensor, up: Tensor, up_bias: Tensor,
                 ln_gain: Tensor, ln_bias: Tensor):
        _require(p.ndim == 2 and down.ndim == 2, f"residual: P {p.shape} and down {down.shape} must be 2-D")
        super().__init__(*p.shape)
        self.hidden = down.shape[0]
        _require(self.hidden >= 1, "residual: bottleneck h must be >= 1")
        self.p = p
        self.down = down
        self.down_bias = down_bias
        self.up = up
        self.up_bias = up_bias
        self.ln_gain = ln_gain
        self.ln_bias = ln_bias
        e, c, h = self.e, self.c, self.hidden
        self._check_shapes({
            'P': (e, c), 'down': (h, e), 'down_bias': (h,), 'up': (e, h), 'up_bias': (e,),
            'ln_gain': (e,), 'ln_bias': (e,),
        })

    def parameters(self):
        return OrderedDict([
            ('P', self.p), ('down', self.down), ('down_bias', self.down_bias), ('up', self.up),
            ('up_bias', self.up_bias), ('ln_gain', self.ln_gain), ('ln_bias', self.ln_bias),
        ])

    def materialize(self) -> Tensor:
        ones_row = ops.ones([1, self.c])
        hidden = ops.add(ops.matmul(self.down, self.p),
                         ops.matmul(ops.reshape(self.down_bias, [self.hidden, 1]), ones_row))
        out = ops.add(ops.matmul(self.up, ops.relu(hidden)),
                      ops.matmul(ops.reshape(self.up_bias, [self.e, 1]), ones_row))
        normed = ops.transpose(ops.layer_norm(ops.transpose(out), self.ln_gain, self.ln_bias))
        return ops.add(normed, self.p)

    def dims(self):
        return {'e': self.e, 'c': self.c, 'h': self.hidden}


class RankProbePrompt(PromptParameterization):
    """
    P_emb = U·ReLU(Σ)·V, где Σ [e×c] диагональная и обучается только её диагональ.

    Требует c ≤ e.
    """
    kind = 'rank-probe'

    def __init__(self, u: Tensor, sigma_diag: Tensor, v: Tensor):
        _require(u.ndim == 2 and v.ndim == 2 and sigma_diag.ndim == 1,
                 f"rank-probe: bad ranks U {u.shape}, sigma {sigma_diag.shape}, V {v.shape}")
        super().__init__(u.shape[0], v.shape[0])
        _require(self.c <= self.e, f"rank-probe needs c <= e, got c={self.c}, e={self.e}")
        self.u = u
        self.sigma_diag = sigma_diag
        self.v = v
        self._check_shapes({'U': (self.e, self.e), 'sigma_diag': (self.c,), 'V': (self.c, self.c)})

    def parameters(self):
        return OrderedDict([('U', self.u), ('sigma_diag', self.sigma_diag), ('V', self.v)])

    def sigma_matrix(self) -> Tensor:
        """Σ [e×c]: вне диагонали ровно нули."""
        return ops.diag_embed(self.sigma_diag, self.e, self.c)

    def materialize(self) -> Tensor:
        return ops.matmul(ops.matmul(self.u, ops.relu(self.sigma_matrix())), self.v)
