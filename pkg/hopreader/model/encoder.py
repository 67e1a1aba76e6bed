"""
Контекстное кодирование вопроса и абзаца с гейтами и многоходовое
интерактивное внимание абзаца к вопросу.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from hopreader.core.errors import ConfigError, ShapeError
from hopreader.core.recurrent import GruParams, bigru
from hopreader.core.tensor import Tensor, concat, dropout, sigmoid, softmax
from hopreader.model.params import ParamStore

BiGru = Tuple[GruParams, GruParams]


@dataclass
class EncoderState:
    u_q: Tensor       # (n, D)
    q1: Tensor        # (D,)
    e_p1: Tensor      # (m, dp)
    u_p: Tensor       # (m, D)
    p1: Tensor        # (D,)
    u_q2: Tensor      # (n, D)
    q2: Tensor        # (D,)


@dataclass
class HopState:
    hop: int
    similarity: Tensor   # (m, n)
    attention: Tensor    # (m, n), строки: распределения по словам вопроса
    attended: Tensor     # (m, D)
    passage: Tensor      # (m, D)
    final: Tensor        # (D,)


@dataclass
class HopParams:
    w_p: Tensor
    w_q: Tensor
    w_pq: Tensor
    fusion: BiGru


class Dropout:
    """Dropout на входах bigru; rng передаётся явно, чтобы прогоны были воспроизводимы."""

    def __init__(self, rate: float, training: bool, rng: Optional[np.random.Generator]):
        self.rate = rate
        self.training = training and rate > 0.0
        self.rng = rng

    def __call__(self, x: Tensor) -> Tensor:
        if not self.training:
            return x
        return dropout(x, self.rate, True, self.rng)


NO_DROPOUT = Dropout(0.0, False, None)


def _gate_mix(vector: Tensor, rows_: Tensor, W: Tensor, b: Tensor, beta_W: Tensor, beta_b: Tensor, source: Tensor) -> Tensor:
    """g = σ(W·source + b); row_i ← g∘(β·vector) + (1−g)∘row_i, одинаково для всех позиций."""
    if W.shape[1] != source.shape[0] or beta_W.shape[1] != vector.shape[0]:
        raise ShapeError(f"gate: W {W.shape} / beta {beta_W.shape} do not match inputs {source.shape}, {vector.shape}")
    if rows_.shape[1] != W.shape[0]:
        raise ShapeError(f"gate: rows {rows_.shape} do not match gate output {W.shape[0]}")
    gate = sigmoid(W @ source + b)
    projected = beta_W @ vector + beta_b
    return gate * projected + (1.0 - gate) * rows_


def encode_question(e_q: Tensor, gru: BiGru, drop: Dropout = NO_DROPOUT) -> Tuple[Tensor, Tensor]:
    return bigru(drop(e_q), *gru)


def gate_passage_inputs(q1: Tensor, e_p: Tensor, W: Tensor, b: Tensor, beta_W: Tensor, beta_b: Tensor) -> Tensor:
    return _gate_mix(q1, e_p, W, b, beta_W, beta_b, source=q1)


def encode_passage(e_p1: Tensor, gru: BiGru, drop: Dropout = NO_DROPOUT) -> Tuple[Tensor, Tensor]:
    return bigru(drop(e_p1), *gru)


def reencode_question(
    p1: Tensor, u_q: Tensor, W: Tensor, b: Tensor, beta_W: Tensor, beta_b: Tensor, gru: BiGru,
    drop: Dropout = NO_DROPOUT,
) -> Tuple[Tensor, Tensor]:
    e_q2 = _gate_mix(p1, u_q, W, b, beta_W, beta_b, source=p1)
    return bigru(drop(e_q2), *gru)


def similarity(passage: Tensor, question: Tensor, hop: Optional[HopParams] = None, mode: str = "trilinear") -> Tensor:
    """
    S (m × n). trilinear: s_ij = w_p·p_i + w_q·q_j + w_pq·(p_i∘q_j);
    dot: s_ij = p_i·q_j.
    """
    if passage.shape[1] != question.shape[1]:
        raise ShapeError(f"similarity: passage {passage.shape} and question {question.shape} state sizes differ")
    m, n = passage.shape[0], question.shape[0]
    if mode == "dot":
        return passage @ question.T
    if mode != "trilinear":
        raise ConfigError(f"unknown similarity '{mode}'")
    if hop is None:
        raise ValueError("trilinear similarity needs weights")
    p_term = (passage @ hop.w_p).reshape(m, 1)
    q_term = (question @ hop.w_q).reshape(1, n)
    return p_term + q_term + (passage * hop.w_pq) @ question.T


def attend_question(S: Tensor, question: Tensor) -> Tuple[Tensor, Tensor]:
    """Для каждого слова абзаца softmax по словам вопроса и взвешенная сумма их состояний."""
    if S.shape[1] != question.shape[0]:
        raise ShapeError(f"attend: S {S.shape} vs question states {question.shape}")
    a = softmax(S, axis=1)
    return a, a @ question


def fusion_input(h: Tensor, attended: Tensor) -> Tensor:
    if h.shape != attended.shape:
        raise ShapeError(f"fuse_hop: states {h.shape} and attended {attended.shape} differ")
    return concat([h, attended, h * attended, h + attended], axis=1)


def fuse_hop(h: Tensor, attended: Tensor, gru: BiGru, drop: Dropout = NO_DROPOUT) -> Tuple[Tensor, Tensor]:
    return bigru(drop(fusion_input(h, attended)), *gru)


def run_hops(
    u_p: Tensor, u_q2: Tensor, hops: List[HopParams], mode: str = "trilinear", drop: Dropout = NO_DROPOUT,
) -> List[HopState]:
    if not hops:
        raise ConfigError("hops must be >= 1")
    states: List[HopState] = []
    current = u_p
    for t, hop in enumerate(hops, start=1):
        S = similarity(current, u_q2, hop, mode)
        a, attended = attend_question(S, u_q2)
        passage, final = fuse_hop(current, attended, hop.fusion, drop)
        states.append(HopState(hop=t, similarity=S, attention=a, attended=attended, passage=passage, final=final))
        current = passage
    return states


class Encoder:
    def __init__(self, store: ParamStore, p_in: int, q_in: int, hidden: int, hops: int,
                 mode: str = "trilinear", passage_direct: bool = False):
        if hops < 1:
            raise ConfigError(f"hops must be >= 1, got {hops}")
        D = 2 * hidden
        self.mode = mode
        self.passage_direct = passage_direct
        self.question_gru = store.bigru("enc.question", q_in, hidden)
        if not passage_direct:
            self.W_q1 = store.matrix("enc.gate_q1.W", p_in, D)
            self.b_q1 = store.vector("enc.gate_q1.b", p_in)
            self.beta_q = store.matrix("enc.beta_q.W", p_in, D)
            self.beta_q_b = store.vector("enc.beta_q.b", p_in)
        self.passage_gru = store.bigru("enc.passage", p_in, hidden)
        self.W_p1 = store.matrix("enc.gate_p1.W", D, D)
        self.b_p1 = store.vector("enc.gate_p1.b", D)
        self.beta_p = store.matrix("enc.beta_p.W", D, D)
        self.beta_p_b = store.vector("enc.beta_p.b", D)
        self.requestion_gru = store.bigru("enc.requestion", D, hidden)
        self.hops: List[HopParams] = []
        for t in range(1, hops + 1):
            prefix = f"hop{t}"
            if mode == "trilinear":
                w_p, w_q, w_pq = (store.weights(f"{prefix}.sim.{k}", D) for k in ("p", "q", "pq"))
            else:
                w_p = w_q = w_pq = None
            self.hops.append(HopParams(w_p, w_q, w_pq, store.bigru(f"{prefix}.fusion", 4 * D, hidden)))

    def encode(self, e_p: Tensor, e_q: Tensor, drop: Dropout = NO_DROPOUT) -> EncoderState:
        u_q, q1 = encode_question(e_q, self.question_gru, drop)
        if self.passage_direct:
            e_p1 = e_p
        else:
            e_p1 = gate_passage_inputs(q1, e_p, self.W_q1, self.b_q1, self.beta_q, self.beta_q_b)
        u_p, p1 = encode_passage(e_p1, self.passage_gru, drop)
        u_q2, q2 = reencode_question(p1, u_q, self.W_p1, self.b_p1, self.beta_p, self.beta_p_b,
                                     self.requestion_gru, drop)
        return EncoderState(u_q=u_q, q1=q1, e_p1=e_p1, u_p=u_p, p1=p1, u_q2=u_q2, q2=q2)

    def interact(self, state: EncoderState, drop: Dropout = NO_DROPOUT) -> List[HopState]:
        return run_hops(state.u_p, state.u_q2, self.hops, self.mode, drop)
