from typing import Iterable, List, Sequence, Tuple

import numpy as np

from hopreader.core.errors import ShapeError
from hopreader.core.tensor import Tensor, log, tsum

LOG_FLOOR = 1e-12


def span_loss(p_s: Tensor, p_e: Tensor, y_s: int, y_e: int) -> Tuple[Tensor, bool]:
    """
    −log p_s[y_s] − log p_e[y_e]. Вероятности ниже LOG_FLOOR зажимаются;
    второй элемент результата сообщает, сработал ли зажим.
    """
    m = p_s.shape[0]
    if p_e.shape[0] != m:
        raise ShapeError(f"span_loss: start {p_s.shape} and end {p_e.shape} lengths differ")
    if not (0 <= y_s < m and 0 <= y_e < m):
        raise IndexError(f"gold span ({y_s}, {y_e}) is outside a passage of {m} tokens")
    clamped = bool(p_s.data[y_s] <= LOG_FLOOR or p_e.data[y_e] <= LOG_FLOOR)
    loss = -(log(p_s[y_s], floor=LOG_FLOOR) + log(p_e[y_e], floor=LOG_FLOOR))
    return loss, clamped


def heads_loss(heads: Sequence[Tuple[Tensor, Tensor]], span: Tuple[int, int]) -> Tuple[Tensor, bool]:
    """Сумма потерь по всем головам указателей."""
    total = None
    clamped = False
    for p_s, p_e in heads:
        loss, flag = span_loss(p_s, p_e, *span)
        total = loss if total is None else total + loss
        clamped = clamped or flag
    return total, clamped


def objective(loss: Tensor, params: Iterable[Tensor], l2: float) -> Tensor:
    """loss + λ·‖Θ‖²"""
    if l2 < 0:
        raise ValueError(f"l2 weight must be >= 0, got {l2}")
    if l2 == 0:
        return loss
    penalty: List[Tensor] = [tsum(p * p) for p in params if p.size]
    if not penalty:
        return loss
    reg = penalty[0]
    for term in penalty[1:]:
        reg = reg + term
    return loss + l2 * reg


def l2_gradient(value: np.ndarray, l2: float) -> np.ndarray:
    return 2.0 * l2 * value
