from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from hopreader.core.errors import ShapeError
from hopreader.core.tensor import Tensor, concat, sigmoid, stack, tanh


@dataclass
class GruParams:
    """Веса одного направления GRU (формулировка Cho et al.)."""
    W_z: Tensor
    W_r: Tensor
    W_h: Tensor
    U_z: Tensor
    U_r: Tensor
    U_h: Tensor
    b_z: Tensor
    b_r: Tensor
    b_h: Tensor

    def __post_init__(self) -> None:
        hidden, inp = self.W_z.shape
        for name in ("W_r", "W_h"):
            if getattr(self, name).shape != (hidden, inp):
                raise ShapeError(f"GruParams.{name}: expected {(hidden, inp)}, got {getattr(self, name).shape}")
        for name in ("U_z", "U_r", "U_h"):
            if getattr(self, name).shape != (hidden, hidden):
                raise ShapeError(f"GruParams.{name}: expected {(hidden, hidden)}, got {getattr(self, name).shape}")
        for name in ("b_z", "b_r", "b_h"):
            if getattr(self, name).shape != (hidden,):
                raise ShapeError(f"GruParams.{name}: expected {(hidden,)}, got {getattr(self, name).shape}")

    @property
    def input_dim(self) -> int:
        return self.W_z.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.W_z.shape[0]

    def tensors(self) -> List[Tensor]:
        return [self.W_z, self.W_r, self.W_h, self.U_z, self.U_r, self.U_h, self.b_z, self.b_r, self.b_h]


def gru_cell(x_t: Tensor, h_prev: Tensor, p: GruParams) -> Tensor:
    if x_t.shape != (p.input_dim,):
        raise ShapeError(f"gru_cell: input {x_t.shape} does not match W {p.W_z.shape}")
    if h_prev.shape != (p.hidden_dim,):
        raise ShapeError(f"gru_cell: state {h_prev.shape} does not match U {p.U_z.shape}")
    z = sigmoid(p.W_z @ x_t + p.U_z @ h_prev + p.b_z)
    r = sigmoid(p.W_r @ x_t + p.U_r @ h_prev + p.b_r)
    h_tilde = tanh(p.W_h @ x_t + p.U_h @ (r * h_prev) + p.b_h)
    return (1.0 - z) * h_prev + z * h_tilde


def _as_matrix(seq: Union[Tensor, Sequence[Tensor]]) -> Tensor:
    if isinstance(seq, Tensor):
        if seq.ndim != 2:
            raise ShapeError(f"bigru: expected (length, dim) matrix, got {seq.shape}")
        if seq.shape[0] == 0:
            raise ShapeError("bigru: empty sequence")
        return seq
    if not seq:
        raise ShapeError("bigru: empty sequence")
    return stack(list(seq))


def run_gru(seq: Tensor, p: GruParams, reverse: bool = False) -> List[Tensor]:
    """
    Прогон одного направления по матрице (length, input_dim).
    Входные проекции W·x считаются одним matmul на всю последовательность,
    в цикле остаются только рекуррентные U·h. Состояния возвращаются в порядке позиций.
    """
    if seq.shape[1] != p.input_dim:
        raise ShapeError(f"gru: input {seq.shape} does not match W {p.W_z.shape}")
    xz = seq @ p.W_z.T + p.b_z
    xr = seq @ p.W_r.T + p.b_r
    xh = seq @ p.W_h.T + p.b_h
    length = seq.shape[0]
    positions = range(length - 1, -1, -1) if reverse else range(length)
    h = Tensor(np.zeros(p.hidden_dim))
    states: List[Tensor] = [h] * length
    for t in positions:
        z = sigmoid(xz[t] + p.U_z @ h)
        r = sigmoid(xr[t] + p.U_r @ h)
        h_tilde = tanh(xh[t] + p.U_h @ (r * h))
        h = (1.0 - z) * h + z * h_tilde
        states[t] = h
    return states


def bigru(seq: Union[Tensor, Sequence[Tensor]], fwd: GruParams, bwd: GruParams) -> Tuple[Tensor, Tensor]:
    """
    Двунаправленный GRU.

    Возвращает (states, final): states: матрица (length, 2h), где строка i это
    [fwd_i ; bwd_i]; final: конкатенация последних состояний каждого направления
    (fwd на позиции n-1, bwd на позиции 0).
    """
    matrix = _as_matrix(seq)
    forward = run_gru(matrix, fwd)
    backward = run_gru(matrix, bwd, reverse=True)
    states = concat([stack(forward), stack(backward)], axis=1)
    final = concat([forward[-1], backward[0]])
    return states, final
