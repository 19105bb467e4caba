"""SVD малых матриц одностронним методом Якоби и численный ранг."""
import logging
from typing import Tuple, Union

import numpy as np

from dptlab.app.errors import NumericalError
from dptlab.handlers.autodiff.tensor import Tensor

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)

MAX_SWEEPS = 100
DEFAULT_TOL_FACTOR = 1e-12
# Порог ортогональности пары столбцов: ORTHOGONALITY_FACTOR · rows · eps относительно их норм
ORTHOGONALITY_FACTOR = 10.0

MatrixLike = Union[Tensor, np.ndarray]


def _as_array(m: MatrixLike) -> np.ndarray:
    data = m.data if isinstance(m, Tensor) else np.asarray(m, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError(f"SVD expects a 2-D matrix, got shape {list(data.shape)}")
    return data


def _jacobi_tall(a: np.ndarray, max_sweeps: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Односторонний Якоби для r ≥ s: вращаем столбцы W = A·V до попарной ортогональности."""
    w = a.copy()
    s_cols = w.shape[1]
    eps = np.finfo(np.float64).eps
    tol = ORTHOGONALITY_FACTOR * w.shape[0] * eps
    # Столбец с нормой не выше tol·‖A‖_F считается нулевым: его пара не вращается
    floor = (tol * float(np.linalg.norm(a))) ** 2
    v = np.eye(s_cols)
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for i in range(s_cols - 1):
            for j in range(i + 1, s_cols):
                alpha = float(w[:, i] @ w[:, i])
                beta = float(w[:, j] @ w[:, j])
                gamma = float(w[:, i] @ w[:, j])
                if gamma == 0.0 or alpha <= floor or beta <= floor or abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta)) if zeta != 0 else 1.0
                cos = 1.0 / np.sqrt(1.0 + t * t)
                sin = cos * t
                wi, wj = w[:, i].copy(), w[:, j].copy()
                w[:, i] = cos * wi - sin * wj
                w[:, j] = sin * wi + cos * wj
                vi, vj = v[:, i].copy(), v[:, j].copy()
                v[:, i] = cos * vi - sin * vj
                v[:, j] = sin * vi + cos * vj
        if not rotated:
            logger.debug(f"Jacobi SVD converged after {sweep} sweeps")
            break
    else:
        raise NumericalError(f"Jacobi SVD did not converge within {max_sweeps} sweeps for shape {list(a.shape)}")

    s = np.sqrt(np.maximum((w * w).sum(axis=0), 0.0))
    order = np.argsort(-s, kind='stable')
    s = s[order]
    w = w[:, order]
    v = v[:, order]
    u = np.zeros_like(w)
    nonzero = s * s > floor
    u[:, nonzero] = w[:, nonzero] / s[nonzero]
    return u, s, v.T


def svd(m: MatrixLike, max_sweeps: int = MAX_SWEEPS) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Тонкое SVD: M = U · diag(s) · Vᵀ, s по убыванию.

    Args:
        m: Матрица r×s
        max_sweeps: Предел числа проходов Якоби

    Returns:
        (U [r×k], s [k], Vᵀ [k×s]), k = min(r, s). Столбцы U при нулевых σ нулевые.

    Raises:
        NumericalError: Нет сходимости за max_sweeps проходов
    """
    a = _as_array(m)
    if a.size == 0:
        k = min(a.shape)
        return np.zeros((a.shape[0], k)), np.zeros(k), np.zeros((k, a.shape[1]))
    if a.shape[0] >= a.shape[1]:
        return _jacobi_tall(a, max_sweeps)
    u, s, vt = _jacobi_tall(a.T, max_sweeps)
    return vt.T, s, u.T


def singular_values(m: MatrixLike, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    return svd(m, max_sweeps)[1]


def numerical_rank(m: MatrixLike, tol_factor: float = DEFAULT_TOL_FACTOR, max_sweeps: int = MAX_SWEEPS) -> int:
    """
    Число сингулярных значений σᵢ > tol_factor · max(r, s) · σ_max.

    Raises:
        NumericalError: SVD не сошлось
    """
    a = _as_array(m)
    s = singular_values(a, max_sweeps)
    if s.size == 0 or s[0] == 0.0:
        return 0
    threshold = tol_factor * max(a.shape) * s[0]
    return int(np.count_nonzero(s > threshold))
