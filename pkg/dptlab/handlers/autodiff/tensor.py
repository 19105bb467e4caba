"""Плотный тензор float64 и лента (tape) для обратного режима автодифференцирования.

Правило сброса ленты: backward() проигрывает ленту в обратном порядке и затем
очищает её. Повторный backward() по тому же loss без нового прямого прохода
вызывает UsageError (loss больше не на ленте). Градиенты листьев при этом
накапливаются аддитивно между прямыми проходами, пока их явно не обнулят.

Double-backward не поддерживается: правила backward работают с numpy-массивами,
а не с тензорами на ленте.

Лента своя у каждого потока (threading.local), так что независимые запуски в
разных потоках не пересекаются.
"""
import contextlib
import itertools
import logging
import threading
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from dptlab.app.errors import UsageError

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)

_node_ids = itertools.count(1)

BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    """
    Плотный row-major тензор float64 с буфером градиента.

    Attributes:
        data: numpy-массив значений (C-contiguous, float64) формы shape
        grad: Необязательный массив той же формы
        requires_grad: Участвует ли тензор в вычислении градиентов
        node_id: Идентификатор узла на ленте
        name: Необязательное имя (для логов и дампов)
    """
    __slots__ = ('data', 'grad', 'requires_grad', 'node_id', 'name')

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.array(data, dtype=np.float64, order='C', copy=True)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self.node_id = next(_node_ids)
        self.name = name

    @classmethod
    def from_values(cls, values: Sequence[float], shape: Sequence[int],
                    requires_grad: bool = False, name: Optional[str] = None) -> 'Tensor':
        """Собрать тензор из плоского списка значений и формы."""
        array = np.asarray(values, dtype=np.float64)
        expected = int(np.prod(shape)) if len(shape) else 1
        if array.size != expected:
            raise ValueError(f"{array.size} values do not fill shape {list(shape)}")
        return cls(array.reshape(tuple(shape)), requires_grad=requires_grad, name=name)

    @classmethod
    def zeros(cls, shape: Sequence[int], requires_grad: bool = False, name: Optional[str] = None) -> 'Tensor':
        return cls(np.zeros(tuple(shape)), requires_grad=requires_grad, name=name)

    @property
    def shape(self) -> List[int]:
        return list(self.data.shape)

    @property
    def values(self) -> np.ndarray:
        """Плоское row-major представление (view)."""
        return self.data.reshape(-1)

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        if self.size != 1:
            raise UsageError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> 'Tensor':
        return Tensor(self.data, requires_grad=False, name=self.name)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ''
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"


@dataclass
class TapeEntry:
    """Одна записанная операция: входы, выход и правило backward."""
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward_fn: BackwardFn

    @property
    def input_ids(self) -> Tuple[int, ...]:
        return tuple(t.node_id for t in self.inputs)

    @property
    def output_id(self) -> int:
        return self.output.node_id


class Tape:
    """Упорядоченный список операций; порядок записи топологический."""

    def __init__(self):
        self.entries: List[TapeEntry] = []
        self.enabled = True

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor, backward_fn: BackwardFn) -> None:
        self.entries.append(TapeEntry(op, tuple(inputs), output, backward_fn))

    def clear(self) -> None:
        self.entries = []

    def __len__(self) -> int:
        return len(self.entries)


_local = threading.local()


def get_tape() -> Tape:
    """Лента текущего потока (создаётся лениво)."""
    tape = getattr(_local, 'tape', None)
    if tape is None:
        tape = Tape()
        _local.tape = tape
    return tape


def reset_tape() -> None:
    """Сбросить ленту текущего потока (например, после прерванного прохода)."""
    get_tape().clear()


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Отключить запись на ленту внутри блока (оценка, конечные разности)."""
    tape = get_tape()
    previous = tape.enabled
    tape.enabled = False
    try:
        yield
    finally:
        tape.enabled = previous


def make_result(op: str, data: np.ndarray, inputs: Sequence[Tensor], backward_fn: BackwardFn) -> Tensor:
    """
    Обернуть результат операции в Tensor и записать его на ленту,
    если хотя бы один вход требует градиент и запись включена.
    """
    tape = get_tape()
    needs_grad = tape.enabled and any(t.requires_grad for t in inputs)
    out = Tensor.__new__(Tensor)
    out.data = np.ascontiguousarray(data, dtype=np.float64)
    out.grad = None
    out.requires_grad = needs_grad
    out.node_id = next(_node_ids)
    out.name = None
    if needs_grad:
        tape.record(op, inputs, out, backward_fn)
    return out


def _accumulate(tensor: Tensor, grad: np.ndarray) -> None:
    if tensor.grad is None:
        tensor.grad = np.array(grad, dtype=np.float64, copy=True)
    else:
        tensor.grad = tensor.grad + grad


def backward(loss: Tensor) -> None:
    """
    Обратный проход от скалярного loss.

    Заполняет grad у всех тензоров с requires_grad, достижимых из loss
    (накопление аддитивное), затем очищает ленту.

    Args:
        loss: Скалярный тензор (ровно один элемент), записанный на ленту

    Raises:
        UsageError: loss не скаляр или его нет на ленте
    """
    if loss.size != 1:
        raise UsageError(f"backward() needs a scalar loss, got shape {loss.shape}")
    tape = get_tape()
    produced = {entry.output_id for entry in tape.entries}
    if loss.node_id not in produced:
        if loss.requires_grad:
            # loss сам является листом
            _accumulate(loss, np.ones_like(loss.data))
            return
        raise UsageError("backward() called on a tensor that is not on the tape")

    grads: Dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.data)}
    leaves: Dict[int, Tensor] = {}
    for entry in reversed(tape.entries):
        grad_out = grads.pop(entry.output_id, None)
        if grad_out is None:
            continue
        _accumulate(entry.output, grad_out)
        input_grads = entry.backward_fn(grad_out)
        for inp, g in zip(entry.inputs, input_grads):
            if g is None or not inp.requires_grad:
                continue
            if inp.node_id in grads:
                grads[inp.node_id] = grads[inp.node_id] + g
            else:
                grads[inp.node_id] = g
            if inp.node_id not in produced:
                leaves[inp.node_id] = inp

    for node_id, g in grads.items():
        leaf = leaves.get(node_id)
        if leaf is not None:
            _accumulate(leaf, g)
    logger.debug(f"Backward replayed {len(tape.entries)} tape entries, {len(leaves)} leaves")
    tape.clear()
