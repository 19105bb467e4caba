"""Инициализация, экспорт и сжатие промптов."""
import logging
from collections import OrderedDict
from typing import Any, Mapping, Optional

import numpy as np

from dptlab.app.errors import ConfigurationError, ParseError, UsageError
from dptlab.app.storage import load_tensors, save_tensors
from dptlab.handlers.autodiff.tensor import Tensor, no_grad
from dptlab.handlers.probe.svd_service import svd
from dptlab.handlers.prompts.models import (
    PROMPT_KINDS, DecomposedPrompt, PromptParameterization, RankProbePrompt, ResidualPrompt, VanillaPrompt,
)

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)

PROMPT_INITS = ('vocab', 'gaussian')

# Имя тензора в экспортированном файле промпта
EXPORT_TENSOR_NAME = 'P_emb'


def _vanilla_matrix(rng: np.random.Generator, e: int, c: int, init: str, sigma_t: float,
                    embedding_table: Optional[np.ndarray]) -> np.ndarray:
    if init == 'vocab':
        if embedding_table is not None and embedding_table.shape[0] >= c and embedding_table.shape[1] == e:
            rows = rng.choice(embedding_table.shape[0], size=c, replace=False)
            return embedding_table[rows].T.copy()
        logger.warning(f"Copy-init impossible for c={c} (table {None if embedding_table is None else list(embedding_table.shape)}), using Gaussian init")
    return rng.normal(0.0, sigma_t, size=(e, c))


def init_prompt(kind: str, e: int, c: int, b: Optional[int] = None, h: Optional[int] = None, seed: int = 0,
                embedding_table: Optional[np.ndarray] = None, sigma_t: float = 1.0,
                init: str = 'vocab') -> PromptParameterization:
    """
    Создать параметризацию промпта.

    Args:
        kind: vanilla, dpt, residual или rank-probe
        e: Размерность эмбеддинга
        c: Длина промпта
        b: Bottleneck A·B (для dpt)
        h: Ширина MLP (для residual)
        seed: Сид
        embedding_table: Таблица эмбеддингов [V×e] для copy-init (vanilla, residual)
        sigma_t: Целевое std элементов промпта для Gaussian init
        init: vocab (копия c различных строк словаря) или gaussian

    Returns:
        Параметризация с requires_grad=True у всех θ_P

    Raises:
        ConfigurationError: Неизвестный kind/init или некорректные размерности
    """
    if kind not in PROMPT_KINDS:
        raise ConfigurationError(f"Unknown prompt kind {kind!r}, expected one of {PROMPT_KINDS}")
    if init not in PROMPT_INITS:
        raise ConfigurationError(f"Unknown prompt init {init!r}, expected one of {PROMPT_INITS}")
    if e < 1 or c < 1:
        raise ConfigurationError(f"Prompt dimensions must be >= 1, got e={e}, c={c}")
    if sigma_t <= 0:
        raise ConfigurationError(f"sigma_t must be > 0, got {sigma_t}")
    rng = np.random.default_rng(seed)

    if kind == 'vanilla':
        return VanillaPrompt(Tensor(_vanilla_matrix(rng, e, c, init, sigma_t, embedding_table), requires_grad=True))

    if kind == 'dpt':
        if b is None or b < 1:
            raise ConfigurationError(f"dpt needs bottleneck b >= 1, got {b}")
        # Дисперсия элемента A·B равна b·σ⁴ = σ_t⁴
        sigma = (1.0 / b) ** 0.25 * sigma_t
        a = rng.normal(0.0, sigma, size=(e, b))
        b_matrix = rng.normal(0.0, sigma, size=(b, c))
        return DecomposedPrompt(Tensor(a, requires_grad=True), Tensor(b_matrix, requires_grad=True))

    if kind == 'residual':
        if h is None or h < 1:
            raise ConfigurationError(f"residual needs bottleneck h >= 1, got {h}")
        p = _vanilla_matrix(rng, e, c, init, sigma_t, embedding_table)
        return ResidualPrompt(
            Tensor(p, requires_grad=True),
            Tensor(rng.normal(0.0, 1.0 / np.sqrt(e), size=(h, e)), requires_grad=True),
            Tensor(np.zeros(h), requires_grad=True),
            Tensor(rng.normal(0.0, 1.0 / np.sqrt(h), size=(e, h)), requires_grad=True),
            Tensor(np.zeros(e), requires_grad=True),
            Tensor(np.ones(e), requires_grad=True),
            Tensor(np.zeros(e), requires_grad=True),
        )

    if c > e:
        raise ConfigurationError(f"rank-probe needs c <= e, got c={c}, e={e}")
    return RankProbePrompt(
        Tensor(rng.normal(0.0, 1.0 / np.sqrt(e), size=(e, e)), requires_grad=True),
        Tensor(np.ones(c), requires_grad=True),
        Tensor(rng.normal(0.0, 1.0 / np.sqrt(c), size=(c, c)), requires_grad=True),
    )


def prompt_file_name(kind: str, e: int, c: int, b: Optional[int], seed: int) -> str:
    """Имя файла экспортированного промпта: kind, e, c, b и seed."""
    return f"{kind}-e{e}-c{c}-b{b if b is not None else 0}-seed{seed}.prompt"


def export_product(param: PromptParameterization, path: str, header: Optional[Mapping[str, Any]] = None) -> None:
    """
    Сохранить материализованное произведение A·B для инференса.

    Raises:
        UsageError: param не DecomposedPrompt
        OSError: Ошибка записи (сообщение содержит путь)
    """
    if not isinstance(param, DecomposedPrompt):
        raise UsageError(f"export_product expects a dpt prompt, got {param.kind}")
    with no_grad():
        product = param.materialize().data.copy()
    meta = OrderedDict(kind=param.kind, e=param.e, c=param.c, b=param.bottleneck)
    if header:
        meta.update(header)
    save_tensors(path, OrderedDict([(EXPORT_TENSOR_NAME, product)]), meta)


def load_vanilla_prompt(path: str) -> VanillaPrompt:
    """
    Загрузить экспортированный промпт как VanillaPrompt.

    Raises:
        ParseError: В файле нет тензора P_emb или он не двумерный
    """
    _, tensors = load_tensors(path)
    if EXPORT_TENSOR_NAME not in tensors or tensors[EXPORT_TENSOR_NAME].ndim != 2:
        raise ParseError(f"{path}: expected a 2-D tensor named {EXPORT_TENSOR_NAME}")
    return VanillaPrompt(Tensor(tensors[EXPORT_TENSOR_NAME], requires_grad=True))


def fit_decomposed(target, b: int) -> DecomposedPrompt:
    """
    Лучшая в норме Фробениуса факторизация ранга b: A = U_b·√S_b, B = √S_b·V_bᵀ.

    Args:
        target: Матрица [e×c] (Tensor или numpy)
        b: Bottleneck, 1 ≤ b ≤ min(e, c)

    Raises:
        ConfigurationError: b вне диапазона
    """
    data = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=np.float64)
    e, c = data.shape
    if not 1 <= b <= min(e, c):
        raise ConfigurationError(f"fit_decomposed needs 1 <= b <= min(e, c) = {min(e, c)}, got {b}")
    u, s, vt = svd(data)
    root = np.sqrt(s[:b])
    a = u[:, :b] * root[None, :]
    b_matrix = root[:, None] * vt[:b, :]
    return DecomposedPrompt(Tensor(a, requires_grad=True), Tensor(b_matrix, requires_grad=True))


def export_prompt(param: PromptParameterization, path: str, header: Optional[Mapping[str, Any]] = None) -> None:
    """Сохранить материализованный P_emb любой параметризации (читается load_vanilla_prompt)."""
    with no_grad():
        matrix = param.materialize().data.copy()
    meta = OrderedDict(kind=param.kind, e=param.e, c=param.c)
    if header:
        meta.update(header)
    save_tensors(path, OrderedDict([(EXPORT_TENSOR_NAME, matrix)]), meta)


def relative_residual(target, param: PromptParameterization) -> float:
    """‖target − P_emb‖_F / ‖target‖_F (0 для нулевого target и точного совпадения)."""
    data = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=np.float64)
    with no_grad():
        diff = float(np.linalg.norm(data - param.materialize().data))
    norm = float(np.linalg.norm(data))
    return diff / norm if norm > 0 else diff


def prompt_from_file(path: str, kind: str, e: int, c: int, b: Optional[int] = None) -> PromptParameterization:
    """
    Начальный промпт из экспортированного файла: vanilla как есть, dpt через fit_decomposed.

    Raises:
        ConfigurationError: Форма промпта не [e×c] или kind не vanilla/dpt
        ParseError: Файл не содержит P_emb
    """
    loaded = load_vanilla_prompt(path)
    if (loaded.e, loaded.c) != (e, c):
        raise ConfigurationError(f"Prompt {path} has shape [{loaded.e}, {loaded.c}], expected [{e}, {c}]")
    if kind == 'vanilla':
        return loaded
    if kind == 'dpt':
        if b is None:
            raise ConfigurationError("dpt needs bottleneck b to compress a prompt")
        fitted = fit_decomposed(loaded.p, b)
        logger.info(f"Compressed {path} to rank {b}: relative residual {relative_residual(loaded.p, fitted):.3e}")
        return fitted
    raise ConfigurationError(f"Only vanilla and dpt prompts can start from a file, got {kind}")
