import copy
import logging
from collections import OrderedDict
from typing import Dict, List

import numpy as np

from dptlab.app.errors import ConfigurationError
from dptlab.app.storage import load_tensors, save_tensors
from dptlab.handlers.autodiff.tensor import Tensor
from dptlab.handlers.backbone.config import BackboneConfig
from dptlab.utils import sha256_hexdigest

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)


def _layer_shapes(config: BackboneConfig) -> Dict[str, tuple]:
    """Имена и формы всех весов (порядок фиксирован, от него зависит init и чекпоинт)."""
    e, f = config.e, config.ffn_dim
    shapes: Dict[str, tuple] = OrderedDict()
    shapes['embedding'] = (config.vocab_size, e)
    for i in range(config.n_layers):
        p = f'enc.{i}'
        shapes[f'{p}.ln1.gain'] = (e,)
        shapes[f'{p}.ln1.bias'] = (e,)
        for w in ('wq', 'wk', 'wv', 'wo'):
            shapes[f'{p}.attn.{w}'] = (e, e)
        shapes[f'{p}.ln2.gain'] = (e,)
        shapes[f'{p}.ln2.bias'] = (e,)
        shapes[f'{p}.ffn.w1'] = (e, f)
        shapes[f'{p}.ffn.w2'] = (f, e)
    shapes['enc.final_ln.gain'] = (e,)
    shapes['enc.final_ln.bias'] = (e,)
    for i in range(config.n_layers):
        p = f'dec.{i}'
        for block in ('ln1', 'ln2', 'ln3'):
            shapes[f'{p}.{block}.gain'] = (e,)
            shapes[f'{p}.{block}.bias'] = (e,)
        for attn in ('self', 'cross'):
            for w in ('wq', 'wk', 'wv', 'wo'):
                shapes[f'{p}.{attn}.{w}'] = (e, e)
        shapes[f'{p}.ffn.w1'] = (e, f)
        shapes[f'{p}.ffn.w2'] = (f, e)
    shapes['dec.final_ln.gain'] = (e,)
    shapes['dec.final_ln.bias'] = (e,)
    return shapes


class Backbone:
    """
    Крошечный encoder-decoder трансформер (θ).

    Выходная проекция связана с таблицей эмбеддингов. В замороженном состоянии
    ни один вес не требует градиента, поэтому лента не записывает для них
    backward-правила, а оптимизатор не заводит для них состояние.

    Attributes:
        config: Архитектура
        params: Упорядоченный словарь имя → Tensor
        frozen: Заморожены ли веса
    """

    def __init__(self, config: BackboneConfig, params: 'OrderedDict[str, Tensor]', frozen: bool = True):
        expected = _layer_shapes(config)
        if list(params) != list(expected):
            missing = set(expected) - set(params)
            extra = set(params) - set(expected)
            raise ConfigurationError(f"Backbone weights do not match config: missing {sorted(missing)}, extra {sorted(extra)}")
        for name, shape in expected.items():
            if tuple(params[name].shape) != shape:
                raise ConfigurationError(f"Weight {name} has shape {params[name].shape}, expected {list(shape)}")
        self.config = config
        self.params = params
        self.frozen = False
        if frozen:
            self.freeze()
        else:
            self.thaw()

    @classmethod
    def init(cls, config: BackboneConfig, seed: int) -> 'Backbone':
        """
        Случайная инициализация: эмбеддинги N(0, 1), матрицы N(0, 1/fan_in),
        gain = 1, bias = 0. Возвращается размороженный бэкбон (для предобучения).
        """
        rng = np.random.default_rng(seed)
        params: 'OrderedDict[str, Tensor]' = OrderedDict()
        for name, shape in _layer_shapes(config).items():
            if name.endswith('.gain'):
                data = np.ones(shape)
            elif name.endswith('.bias'):
                data = np.zeros(shape)
            elif name == 'embedding':
                data = rng.normal(0.0, 1.0, size=shape)
            else:
                data = rng.normal(0.0, 1.0 / np.sqrt(shape[0]), size=shape)
            params[name] = Tensor(data, name=name)
        return cls(config, params, frozen=False)

    def parameters(self) -> 'OrderedDict[str, Tensor]':
        return self.params

    def param_count(self) -> int:
        return sum(t.size for t in self.params.values())

    def freeze(self) -> None:
        for t in self.params.values():
            t.requires_grad = False
            t.zero_grad()
        self.frozen = True

    def thaw(self) -> None:
        for t in self.params.values():
            t.requires_grad = True
        self.frozen = False

    def thawed_copy(self) -> 'Backbone':
        """Независимая размороженная копия (для full fine-tune без порчи оригинала)."""
        params = OrderedDict((name, Tensor(t.data, name=name)) for name, t in self.params.items())
        return Backbone(copy.deepcopy(self.config), params, frozen=False)

    def checksum(self) -> str:
        """SHA-256 по именам, формам и байтам всех весов."""
        def chunks():
            for name, t in self.params.items():
                yield name.encode('utf-8')
                yield str(t.shape).encode('utf-8')
                yield np.ascontiguousarray(t.data).tobytes()
        return sha256_hexdigest(chunks())

    def grads_present(self) -> List[str]:
        """Имена весов, у которых есть градиент (для проверки заморозки)."""
        return [name for name, t in self.params.items() if t.grad is not None]

    def save(self, path: str) -> None:
        """Сохранить чекпоинт: заголовок BackboneConfig + дамп весов."""
        header = dict(self.config.to_header())
        header['frozen'] = int(self.frozen)
        save_tensors(path, OrderedDict((n, t.data) for n, t in self.params.items()), header)

    @classmethod
    def load(cls, path: str) -> 'Backbone':
        """Загрузить чекпоинт; бэкбон возвращается замороженным."""
        header, arrays = load_tensors(path)
        config = BackboneConfig.from_header(header)
        params = OrderedDict((name, Tensor(array, name=name)) for name, array in arrays.items())
        backbone = cls(config, params, frozen=True)
        logger.info(f"Loaded backbone e={config.e}, layers={config.n_layers}, V={config.vocab_size} from {path}")
        return backbone
