"""Дифференцируемые операции над Tensor.

Каждая операция считает прямой результат на numpy и записывает на ленту
правило backward, возвращающее градиенты по входам (None для входов,
которым градиент не нужен).

Broadcasting поддерживается только двух видов: точное совпадение форм и скаляр.
"""
import logging
from typing import List, Optional, Sequence, Union

import numpy as np

from dptlab.app.errors import DimensionError, VocabularyError
from dptlab.handlers.autodiff.tensor import Tensor, make_result

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)

LAYER_NORM_EPS = 1e-5

ELEMENTWISE_KINDS = ('add', 'subtract', 'multiply', 'scale')

Scalar = Union[int, float]


def _need(t: Tensor) -> bool:
    return t.requires_grad


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Матричное произведение a[m×k] · b[k×n].

    Backward: dA = dC·Bᵀ, dB = Aᵀ·dC.

    Raises:
        DimensionError: Не 2-D или не совпадают внутренние размерности
    """
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    a_data, b_data = a.data, b.data

    def backward_fn(g):
        ga = g @ b_data.T if _need(a) else None
        gb = a_data.T @ g if _need(b) else None
        return ga, gb

    return make_result('matmul', a_data @ b_data, (a, b), backward_fn)


def relu(x: Tensor) -> Tensor:
    """Поэлементный max(0, x); субградиент в нуле равен 0."""
    mask = x.data > 0

    def backward_fn(g):
        return (g * mask,)

    return make_result('relu', np.where(mask, x.data, 0.0), (x,), backward_fn)


def elementwise(kind: str, a: Tensor, b: Union[Tensor, Scalar]) -> Tensor:
    """
    Поэлементные операции add / subtract / multiply / scale.

    Args:
        kind: Одно из ELEMENTWISE_KINDS
        a: Левый операнд
        b: Тензор той же формы, одноэлементный тензор или число (для scale: только число)

    Raises:
        DimensionError: Формы несовместимы
        ValueError: Неизвестный kind
    """
    if kind not in ELEMENTWISE_KINDS:
        raise ValueError(f"Unknown elementwise kind: {kind}")

    if kind == 'scale' or not isinstance(b, Tensor):
        if isinstance(b, Tensor):
            raise DimensionError("scale expects a number as the second operand")
        factor = float(b)
        if kind in ('scale', 'multiply'):
            return make_result(kind, a.data * factor, (a,), lambda g: (g * factor,))
        shift = factor if kind == 'add' else -factor
        return make_result(kind, a.data + shift, (a,), lambda g: (g,))

    if a.shape == b.shape:
        b_scalar = False
    elif b.size == 1:
        b_scalar = True
    else:
        raise DimensionError(f"{kind} shape mismatch: {a.shape} vs {b.shape}")

    a_data = a.data
    b_data = b.data.reshape(()) if b_scalar else b.data

    def reduce_b(g):
        return np.array(g.sum()).reshape(b.data.shape) if b_scalar else g

    if kind == 'add':
        out = a_data + b_data

        def backward_fn(g):
            return (g if _need(a) else None), (reduce_b(g) if _need(b) else None)
    elif kind == 'subtract':
        out = a_data - b_data

        def backward_fn(g):
            return (g if _need(a) else None), (reduce_b(-g) if _need(b) else None)
    else:
        out = a_data * b_data

        def backward_fn(g):
            ga = g * b_data if _need(a) else None
            gb = reduce_b(g * a_data) if _need(b) else None
            return ga, gb

    return make_result(kind, out, (a, b), backward_fn)


def add(a: Tensor, b: Union[Tensor, Scalar]) -> Tensor:
    return elementwise('add', a, b)


def subtract(a: Tensor, b: Union[Tensor, Scalar]) -> Tensor:
    return elementwise('subtract', a, b)


def multiply(a: Tensor, b: Union[Tensor, Scalar]) -> Tensor:
    return elementwise('multiply', a, b)


def scale(a: Tensor, factor: Scalar) -> Tensor:
    return elementwise('scale', a, factor)


def sum_all(x: Tensor) -> Tensor:
    """Сумма всех элементов → скаляр."""
    shape = x.data.shape

    def backward_fn(g):
        return (np.broadcast_to(g.reshape(()), shape).copy(),)

    return make_result('sum', np.array(x.data.sum()), (x,), backward_fn)


def mean_all(x: Tensor) -> Tensor:
    """Среднее всех элементов → скаляр."""
    return scale(sum_all(x), 1.0 / max(x.size, 1))


def transpose(x: Tensor) -> Tensor:
    """Транспонирование 2-D тензора (с копированием, без strided views)."""
    if x.ndim != 2:
        raise DimensionError(f"transpose expects a 2-D tensor, got {x.shape}")
    return make_result('transpose', x.data.T.copy(), (x,), lambda g: (g.T.copy(),))


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    """
    Конкатенация 2-D тензоров по столбцам.

    Raises:
        DimensionError: Разное число строк
    """
    if not parts:
        raise DimensionError("concat_cols needs at least one tensor")
    rows = parts[0].shape[0]
    for p in parts:
        if p.ndim != 2 or p.shape[0] != rows:
            raise DimensionError(
                f"concat_cols row-count mismatch: {[q.shape for q in parts]}"
            )
    widths = [p.shape[1] for p in parts]
    bounds = np.cumsum([0] + widths)

    def backward_fn(g):
        return tuple(
            g[:, bounds[i]:bounds[i + 1]].copy() if _need(p) else None
            for i, p in enumerate(parts)
        )

    return make_result('concat_cols', np.concatenate([p.data for p in parts], axis=1),
                       tuple(parts), backward_fn)


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    """Столбцы [start, stop) 2-D тензора."""
    if x.ndim != 2 or not (0 <= start <= stop <= x.shape[1]):
        raise DimensionError(f"slice_cols [{start}:{stop}] out of range for shape {x.shape}")
    shape = x.data.shape

    def backward_fn(g):
        full = np.zeros(shape)
        full[:, start:stop] = g
        return (full,)

    return make_result('slice_cols', x.data[:, start:stop].copy(), (x,), backward_fn)


def slice_rows(x: Tensor, start: int, stop: int) -> Tensor:
    """Строки [start, stop) 2-D тензора."""
    if x.ndim != 2 or not (0 <= start <= stop <= x.shape[0]):
        raise DimensionError(f"slice_rows [{start}:{stop}] out of range for shape {x.shape}")
    shape = x.data.shape

    def backward_fn(g):
        full = np.zeros(shape)
        full[start:stop, :] = g
        return (full,)

    return make_result('slice_rows', x.data[start:stop, :].copy(), (x,), backward_fn)


def diag_embed(d: Tensor, rows: int, cols: int) -> Tensor:
    """
    Разместить вектор d[k] на диагонали нулевой матрицы rows×cols (k ≤ min(rows, cols)).
    Внедиагональные элементы всегда ровно 0; градиент идёт только в диагональ.
    """
    k = d.size
    if d.ndim != 1 or k > min(rows, cols):
        raise DimensionError(f"diag_embed: vector of shape {d.shape} does not fit {rows}x{cols}")
    out = np.zeros((rows, cols))
    idx = np.arange(k)
    out[idx, idx] = d.data

    def backward_fn(g):
        return (g[idx, idx].copy(),)

    return make_result('diag_embed', out, (d,), backward_fn)


def softmax_rows(x: Tensor) -> Tensor:
    """
    Softmax по строкам 2-D тензора с вычитанием максимума.

    Backward: dX = Y ⊙ (dY − rowsum(dY ⊙ Y)).
    """
    if x.ndim != 2:
        raise DimensionError(f"softmax_rows expects a 2-D tensor, got {x.shape}")
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)

    def backward_fn(g):
        return (y * (g - (g * y).sum(axis=1, keepdims=True)),)

    return make_result('softmax_rows', y, (x,), backward_fn)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """
    Layer normalization по последней оси с аффинным gain/bias.

    Args:
        x: Тензор [...×e] (1-D или 2-D)
        gain: Тензор [e]
        bias: Тензор [e]
        eps: Стабилизатор дисперсии

    Raises:
        DimensionError: Последняя ось не равна e
    """
    e = x.shape[-1] if x.ndim else 0
    if x.ndim not in (1, 2) or gain.shape != [e] or bias.shape != [e]:
        raise DimensionError(
            f"layer_norm shape mismatch: x {x.shape}, gain {gain.shape}, bias {bias.shape}"
        )
    data = x.data
    mu = data.mean(axis=-1, keepdims=True)
    centered = data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = centered * inv_std
    g_data = gain.data
    out = x_hat * g_data + bias.data

    def backward_fn(g):
        gx = None
        if _need(x):
            dx_hat = g * g_data
            gx = inv_std * (
                dx_hat
                - dx_hat.mean(axis=-1, keepdims=True)
                - x_hat * (dx_hat * x_hat).mean(axis=-1, keepdims=True)
            )
        g2 = g.reshape(-1, e)
        gg = (g2 * x_hat.reshape(-1, e)).sum(axis=0) if _need(gain) else None
        gb = g2.sum(axis=0) if _need(bias) else None
        return gx, gg, gb

    return make_result('layer_norm', out, (x, gain, bias), backward_fn)


def _check_ids(ids: Sequence[int], vocab_size: int) -> np.ndarray:
    idx = np.asarray(list(ids), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= vocab_size):
        bad = [int(i) for i in idx if i < 0 or i >= vocab_size]
        raise VocabularyError(f"token ids {bad} out of range for vocabulary of size {vocab_size}")
    return idx


def embedding_lookup(table: Tensor, ids: Sequence[int]) -> Tensor:
    """
    Выборка строк таблицы эмбеддингов в ориентации статьи: результат e×n,
    столбец j равен строке table[ids[j]].

    Backward: градиент столбцов рассеивается в строки таблицы (повторы суммируются).

    Raises:
        VocabularyError: ID вне [0, V)
    """
    if table.ndim != 2:
        raise DimensionError(f"embedding table must be 2-D, got {table.shape}")
    idx = _check_ids(ids, table.shape[0])
    shape = table.data.shape

    def backward_fn(g):
        full = np.zeros(shape)
        np.add.at(full, idx, g.T)
        return (full,)

    out = table.data[idx].T.copy() if idx.size else np.zeros((shape[1], 0))
    return make_result('embedding_lookup', out, (table,), backward_fn)


def cross_entropy(logits: Tensor, targets: Sequence[int]) -> Tensor:
    """
    Средняя по позициям −log softmax(logits)ᵢ[targetᵢ].

    Args:
        logits: Тензор [t×V]
        targets: t идентификаторов токенов

    Raises:
        DimensionError: len(targets) != t
        VocabularyError: target вне [0, V)
    """
    if logits.ndim != 2 or logits.shape[0] != len(targets):
        raise DimensionError(f"cross_entropy: logits {logits.shape} vs {len(targets)} targets")
    t, vocab = logits.shape
    idx = _check_ids(targets, vocab)
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    rows = np.arange(t)
    loss = -log_probs[rows, idx].mean()

    def backward_fn(g):
        probs = np.exp(log_probs)
        probs[rows, idx] -= 1.0
        return (probs * (np.asarray(g).item() / t),)

    return make_result('cross_entropy', np.array(loss), (logits,), backward_fn)


def constant(data, name: Optional[str] = None) -> Tensor:
    """Тензор-константа (без градиента)."""
    return Tensor(data, requires_grad=False, name=name)


def ones(shape: List[int]) -> Tensor:
    return constant(np.ones(tuple(shape)))


def add_n(tensors: Sequence[Tensor]) -> Tensor:
    """Сумма нескольких тензоров одной формы."""
    if not tensors:
        raise DimensionError("add_n needs at least one tensor")
    total = tensors[0]
    for t in tensors[1:]:
        total = add(total, t)
    return total


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    """Изменить форму без изменения row-major порядка значений."""
    shape = tuple(int(d) for d in shape)
    if int(np.prod(shape)) != x.size:
        raise DimensionError(f"cannot reshape {x.shape} into {list(shape)}")
    original = x.data.shape
    return make_result('reshape', x.data.reshape(shape).copy(), (x,), lambda g: (g.reshape(original),))
