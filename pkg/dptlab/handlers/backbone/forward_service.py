"""Прямой проход бэкбона: энкодер над [P_emb; X_emb], декодер с teacher forcing, жадное декодирование.

Блоки pre-LayerNorm, синусоидальные абсолютные позиции. Позиции промпта идут
первыми (0..c−1), позиции текста продолжают их (c..c+n−1). Выходная проекция
связана с таблицей эмбеддингов и масштабируется на 1/√e.
"""
import functools
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from dptlab.app.errors import DimensionError, LengthError, UsageError
from dptlab.handlers.autodiff import ops
from dptlab.handlers.autodiff.tensor import Tensor, no_grad
from dptlab.handlers.backbone.config import BOS_ID, EOS_ID
from dptlab.handlers.backbone.models import Backbone

# Получаем логгер для этого модуля
logger = logging.getLogger(__name__)

# Аддитивная маска будущих позиций в self-attention декодера
MASK_VALUE = -1e9


@functools.lru_cache(maxsize=64)
def _sinusoidal(n: int, e: int) -> np.ndarray:
    positions = np.arange(n, dtype=np.float64)[:, None]
    dims = np.arange(e)
    rates = 1.0 / np.power(10000.0, (2 * (dims // 2)) / e)
    angles = positions * rates[None, :]
    table = np.where(dims % 2 == 0, np.sin(angles), np.cos(angles))
    table.setflags(write=False)
    return table


def positional_encoding(n: int, e: int) -> Tensor:
    """Синусоидальные позиции [n×e] как тензор-константа."""
    return ops.constant(_sinusoidal(n, e))


@functools.lru_cache(maxsize=64)
def _causal_mask(t: int) -> np.ndarray:
    mask = np.triu(np.full((t, t), MASK_VALUE), k=1)
    mask.setflags(write=False)
    return mask


def concat_prompt(p_emb: Tensor, x_emb: Tensor) -> Tensor:
    """
    Приписать промпт слева: [P_emb; X_emb] в ориентации e×(c+n).

    Raises:
        DimensionError: Число строк (e) не совпадает
    """
    if p_emb.ndim != 2 or x_emb.ndim != 2 or p_emb.shape[0] != x_emb.shape[0]:
        raise DimensionError(f"concat_prompt row mismatch: prompt {p_emb.shape} vs input {x_emb.shape}")
    if p_emb.shape[1] == 0:
        return x_emb
    return ops.concat_cols([p_emb, x_emb])


def _attention(backbone: Backbone, prefix: str, queries: Tensor, keys_values: Tensor,
               mask: Optional[np.ndarray] = None) -> Tensor:
    params = backbone.params
    n_heads = backbone.config.n_heads
    d = backbone.config.head_dim
    q = ops.matmul(queries, params[f'{prefix}.wq'])
    k = ops.matmul(keys_values, params[f'{prefix}.wk'])
    v = ops.matmul(keys_values, params[f'{prefix}.wv'])
    heads = []
    for h in range(n_heads):
        q_h = ops.slice_cols(q, h * d, (h + 1) * d)
        k_h = ops.slice_cols(k, h * d, (h + 1) * d)
        v_h = ops.slice_cols(v, h * d, (h + 1) * d)
        scores = ops.scale(ops.matmul(q_h, ops.transpose(k_h)), 1.0 / np.sqrt(d))
        if mask is not None:
            scores = ops.add(scores, ops.constant(mask))
        heads.append(ops.matmul(ops.softmax_rows(scores), v_h))
    merged = heads[0] if n_heads == 1 else ops.concat_cols(heads)
    return ops.matmul(merged, params[f'{prefix}.wo'])


def _ffn(backbone: Backbone, prefix: str, x: Tensor) -> Tensor:
    params = backbone.params
    return ops.matmul(ops.relu(ops.matmul(x, params[f'{prefix}.w1'])), params[f'{prefix}.w2'])


def _ln(backbone: Backbone, prefix: str, x: Tensor) -> Tensor:
    return ops.layer_norm(x, backbone.params[f'{prefix}.gain'], backbone.params[f'{prefix}.bias'])


def encode(backbone: Backbone, sequence: Tensor) -> Tensor:
    """
    Энкодер над последовательностью в ориентации e×L.

    Returns:
        Скрытые состояния [L×e] после финальной нормализации
    """
    e, length = sequence.shape
    x = ops.add(ops.transpose(sequence), positional_encoding(length, e))
    for i in range(backbone.config.n_layers):
        h = _ln(backbone, f'enc.{i}.ln1', x)
        x = ops.add(x, _attention(backbone, f'enc.{i}.attn', h, h))
        h = _ln(backbone, f'enc.{i}.ln2', x)
        x = ops.add(x, _ffn(backbone, f'enc.{i}.ffn', h))
    return _ln(backbone, 'enc.final_ln', x)


def decode_logits(backbone: Backbone, memory: Tensor, decoder_ids: Sequence[int]) -> Tensor:
    """
    Декодер с причинной маской и cross-attention к выходу энкодера.

    Args:
        backbone: Бэкбон
        memory: Выход энкодера [L×e]
        decoder_ids: Вход декодера ([BOS] + префикс ответа)

    Returns:
        Логиты [t×V]
    """
    e = backbone.config.e
    t = len(decoder_ids)
    table = backbone.params['embedding']
    y = ops.add(ops.transpose(ops.embedding_lookup(table, decoder_ids)), positional_encoding(t, e))
    mask = _causal_mask(t)
    for i in range(backbone.config.n_layers):
        h = _ln(backbone, f'dec.{i}.ln1', y)
        y = ops.add(y, _attention(backbone, f'dec.{i}.self', h, h, mask))
        h = _ln(backbone, f'dec.{i}.ln2', y)
        y = ops.add(y, _attention(backbone, f'dec.{i}.cross', h, memory))
        h = _ln(backbone, f'dec.{i}.ln3', y)
        y = ops.add(y, _ffn(backbone, f'dec.{i}.ffn', h))
    y = _ln(backbone, 'dec.final_ln', y)
    return ops.scale(ops.matmul(y, ops.transpose(table)), 1.0 / np.sqrt(e))


def _check_lengths(backbone: Backbone, c: int, input_ids: Sequence[int], target_ids: Sequence[int]) -> None:
    max_len = backbone.config.max_len
    if c + len(input_ids) == 0:
        raise LengthError("Encoder sequence is empty: no prompt and no input tokens")
    if c + len(input_ids) > max_len:
        raise LengthError(
            f"Prompt length {c} + input length {len(input_ids)} exceeds max_len={max_len}"
        )
    if len(target_ids) + 1 > max_len:
        raise LengthError(f"Target length {len(target_ids)} + eos exceeds max_len={max_len}")


def teacher_forcing_pair(target_ids: Sequence[int]) -> Tuple[List[int], List[int]]:
    """Вход декодера [BOS]+Y и метки Y+[EOS]."""
    return [BOS_ID] + list(target_ids), list(target_ids) + [EOS_ID]


def forward(backbone: Backbone, p_emb: Tensor, input_ids: Sequence[int],
            target_ids: Sequence[int]) -> Tuple[Tensor, Tensor]:
    """
    −log Pr(Y | [P; X]) с teacher forcing.

    Args:
        backbone: Бэкбон (обычно замороженный)
        p_emb: Промпт [e×c] (c может быть 0)
        input_ids: X
        target_ids: Y

    Returns:
        (loss: средняя кросс-энтропия по позициям Y+[EOS], логиты [t+1 × V])

    Raises:
        LengthError: c + n или t + 1 больше max_len
        DimensionError: Число строк промпта не равно e
    """
    if p_emb.ndim != 2 or p_emb.shape[0] != backbone.config.e:
        raise DimensionError(f"Prompt shape {p_emb.shape} does not match e={backbone.config.e}")
    _check_lengths(backbone, p_emb.shape[1], input_ids, target_ids)
    x_emb = ops.embedding_lookup(backbone.params['embedding'], input_ids)
    memory = encode(backbone, concat_prompt(p_emb, x_emb))
    decoder_ids, labels = teacher_forcing_pair(target_ids)
    logits = decode_logits(backbone, memory, decoder_ids)
    return ops.cross_entropy(logits, labels), logits


def forward_promptless(backbone: Backbone, input_ids: Sequence[int], target_ids: Sequence[int]) -> Tuple[Tensor, Tensor]:
    """Обычный seq2seq-loss без промпта (путь предобучения и эталон для c=0)."""
    _check_lengths(backbone, 0, input_ids, target_ids)
    memory = encode(backbone, ops.embedding_lookup(backbone.params['embedding'], input_ids))
    decoder_ids, labels = teacher_forcing_pair(target_ids)
    logits = decode_logits(backbone, memory, decoder_ids)
    return ops.cross_entropy(logits, labels), logits


def greedy_decode(backbone: Backbone, p_emb: Optional[Tensor], input_ids: Sequence[int], max_steps: int) -> List[int]:
    """
    Жадное декодирование от BOS до EOS или max_steps токенов.

    При равных логитах выбирается меньший ID. EOS в результат не входит.

    Raises:
        UsageError: max_steps < 1
    """
    if max_steps < 1:
        raise UsageError(f"max_steps must be >= 1, got {max_steps}")
    c = p_emb.shape[1] if p_emb is not None else 0
    _check_lengths(backbone, c, input_ids, [])
    max_steps = min(max_steps, backbone.config.max_len - 1)
    with no_grad():
        x_emb = ops.embedding_lookup(backbone.params['embedding'], input_ids)
        sequence = concat_prompt(p_emb.detach(), x_emb) if p_emb is not None else x_emb
        memory = encode(backbone, sequence)
        generated: List[int] = []
        for _ in range(max_steps):
            logits = decode_logits(backbone, memory, [BOS_ID] + generated)
            token = int(np.argmax(logits.data[-1]))
            if token == EOS_ID:
                break
            generated.append(token)
    return generated


def exact_match_accuracy(backbone: Backbone, p_emb: Optional[Tensor], examples) -> float:
    """
    Доля примеров, у которых жадный ответ совпадает с target целиком.

    Args:
        examples: Последовательность объектов с полями input и target
    """
    if not examples:
        return 0.0
    hits = 0
    for example in examples:
        predicted = greedy_decode(backbone, p_emb, example.input, len(example.target) + 1)
        hits += int(predicted == list(example.target))
    return hits / len(examples)
