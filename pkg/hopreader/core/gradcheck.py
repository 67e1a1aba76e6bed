"""Проверка аналитических градиентов центральными конечными разностями."""
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from hopreader.core.tensor import Tensor, backward, no_grad, zero_grad

DEFAULT_STEP = 1e-6
# нижняя граница знаменателя: для почти нулевых градиентов ошибка считается абсолютной
REL_ERR_FLOOR = 1e-2


@dataclass
class CheckResult:
    name: str
    max_rel_err: float
    threshold: float
    checked: int

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.threshold


def relative_error(analytic: float, numeric: float, floor: float = REL_ERR_FLOOR) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def _sample_indices(t: Tensor, samples: Optional[int], rng: np.random.Generator) -> List[Tuple[int, ...]]:
    all_idx = list(np.ndindex(*t.shape)) if t.shape else [()]
    if samples is None or samples >= len(all_idx):
        return all_idx
    chosen = rng.choice(len(all_idx), size=samples, replace=False)
    return [all_idx[i] for i in sorted(chosen)]


def check_gradients(
    fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    step: float = DEFAULT_STEP,
    samples: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    corrupt: float = 1.0,
) -> Tuple[float, int]:
    """
    Сравнивает градиенты backward() с центральными разностями.

    `fn`: замыкание, строящее скалярный выход из `tensors`.
    `samples`: сколько координат проверять на тензор (None: все).
    `corrupt`: множитель аналитического градиента (негативный контроль).
    Возвращает (максимальная относительная ошибка, число проверенных координат).
    """
    rng = rng or np.random.default_rng(0)
    zero_grad(tensors)
    backward(fn())
    analytic = [
        (t.grad.copy() if t.grad is not None else np.zeros_like(t.data)) * corrupt
        for t in tensors
    ]

    worst = 0.0
    checked = 0
    with no_grad():
        for t, grad in zip(tensors, analytic):
            for idx in _sample_indices(t, samples, rng):
                original = t.data[idx]
                t.data[idx] = original + step
                plus = fn().item()
                t.data[idx] = original - step
                minus = fn().item()
                t.data[idx] = original
                numeric = (plus - minus) / (2.0 * step)
                worst = max(worst, relative_error(float(grad[idx]), numeric))
                checked += 1
    zero_grad(tensors)
    return worst, checked

