"""Проверка аналитических градиентов центральными конечными разностями."""
import logging
from typing import Callable, Sequence

import numpy as np

from dptlab.handlers.autodiff.tensor import Tensor, backward, get_tape, no_grad

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)

RELATIVE_ERROR_FLOOR = 1e-8


def _analytic_grads(f: Callable[[Tensor], Tensor], x: Tensor, wrt: Sequence[Tensor]) -> list:
    for t in wrt:
        t.zero_grad()
    get_tape().clear()
    y = f(x)
    if y.requires_grad:
        backward(y)
    else:
        # f не зависит от параметров, лента пуста, градиенты нулевые
        get_tape().clear()
    return [t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in wrt]


def _numeric_grad(f: Callable[[Tensor], Tensor], x: Tensor, target: Tensor, h: float) -> np.ndarray:
    flat = target.data.reshape(-1)
    numeric = np.zeros(flat.size)
    with no_grad():
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            f_plus = f(x).item()
            flat[i] = original - h
            f_minus = f(x).item()
            flat[i] = original
            numeric[i] = (f_plus - f_minus) / (2.0 * h)
    return numeric.reshape(target.data.shape)


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max |a − n| / max(|a|, |n|, 1e-8) по всем координатам."""
    if analytic.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), RELATIVE_ERROR_FLOOR)
    return float(np.max(np.abs(analytic - numeric) / denom))


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, h: float = 1e-5) -> float:
    """
    Сравнить градиент df/dx с центральной конечной разностью.

    Args:
        f: Функция, возвращающая скалярный тензор
        x: Тензор с requires_grad=True; значения временно меняются на месте
        h: Шаг конечной разности (> 0)

    Returns:
        Максимальная относительная ошибка по координатам x
    """
    return grad_check_many(f, x, [x], h)


def grad_check_many(f: Callable[[Tensor], Tensor], x: Tensor, wrt: Sequence[Tensor], h: float = 1e-5) -> float:
    """
    То же, что grad_check, но по нескольким тензорам сразу (например, по всем θ_P).

    Args:
        f: Функция от x, возвращающая скаляр; может замыкать тензоры из wrt
        x: Аргумент f
        wrt: Тензоры, по которым проверяется градиент
        h: Шаг конечной разности

    Returns:
        Максимальная относительная ошибка по всем тензорам
    """
    if h <= 0:
        raise ValueError(f"Step size must be positive, got {h}")
    analytic = _analytic_grads(f, x, wrt)
    worst = 0.0
    for t, a in zip(wrt, analytic):
        n = _numeric_grad(f, x, t, h)
        err = max_relative_error(a, n)
        logger.debug(f"grad_check {t.name or t.shape}: max relative error {err:.3e}")
        worst = max(worst, err)
    for t in wrt:
        t.zero_grad()
    return worst
