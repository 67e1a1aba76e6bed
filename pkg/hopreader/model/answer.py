"""Указатели начала/конца ответа, самовыравнивание и взвешенная проверка двух голов."""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from hopreader.core.errors import ConfigError, ShapeError
from hopreader.core.recurrent import GruParams, bigru
from hopreader.core.tensor import Tensor, sigmoid, softmax
from hopreader.lexical.tokenizer import Token
from hopreader.model.encoder import HopState
from hopreader.model.params import ParamStore

BiGru = Tuple[GruParams, GruParams]


@dataclass
class SpanDistributions:
    p_s1: np.ndarray
    p_e1: np.ndarray
    p_s2: Optional[np.ndarray] = None  # None, когда вторая голова отключена
    p_e2: Optional[np.ndarray] = None

    @property
    def length(self) -> int:
        return int(self.p_s1.shape[0])


@dataclass
class SpanPrediction:
    s: int
    e: int
    confidence: float
    answer_text: str = ""


def pointer(states: Tensor, w_s: Tensor, w_e: Tensor) -> Tuple[Tensor, Tensor]:
    return softmax(states @ w_s, axis=0), softmax(states @ w_e, axis=0)


def point_first(hop_states: Tensor, gru: BiGru, w_s1: Tensor, w_e1: Tensor) -> Tuple[Tensor, Tensor]:
    aggregated, _ = bigru(hop_states, *gru)
    return pointer(aggregated, w_s1, w_e1)


def align_inputs(summary: Tensor, hop_states: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """E_i = g∘P̃_1 + (1−g)∘P̃_i, g = σ(W·P̃_1 + b)."""
    if summary.shape[0] != hop_states.shape[1] or W.shape != (summary.shape[0], summary.shape[0]):
        raise ShapeError(f"self_align: summary {summary.shape}, states {hop_states.shape}, W {W.shape}")
    gate = sigmoid(W @ summary + b)
    return gate * summary + (1.0 - gate) * hop_states


def self_align(summary: Tensor, hop_states: Tensor, W: Tensor, b: Tensor, gru: BiGru) -> Tensor:
    aligned, _ = bigru(align_inputs(summary, hop_states, W, b), *gru)
    return aligned


def point_second(aligned: Tensor, w_s2: Tensor, w_e2: Tensor) -> Tuple[Tensor, Tensor]:
    return pointer(aligned, w_s2, w_e2)


def combine(dists: SpanDistributions, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    if alpha < 1.0:
        raise ConfigError(f"alpha must be >= 1, got {alpha}")
    if dists.p_s2 is None or dists.p_e2 is None:
        return dists.p_s1, dists.p_e1
    return dists.p_s1 + alpha * dists.p_s2, dists.p_e1 + alpha * dists.p_e2


def decode_span(p_s: np.ndarray, p_e: np.ndarray, constrained: bool = True, max_len: int = 15) -> Tuple[int, int, float]:
    """
    constrained: argmax p_s[s]·p_e[e] по парам s ≤ e ≤ s+max_len−1; при равенстве
    побеждает меньший s, затем меньший e (порядок обхода argmax по строкам).
    Иначе независимые argmax, как в исходном правиле.
    """
    m = p_s.shape[0]
    if p_e.shape[0] != m:
        raise ShapeError(f"decode: start {p_s.shape} and end {p_e.shape} lengths differ")
    if m == 0:
        raise ShapeError("decode: empty passage")
    if not constrained:
        s, e = int(np.argmax(p_s)), int(np.argmax(p_e))
        return s, e, float(p_s[s] * p_e[e])
    if max_len < 1:
        raise ConfigError(f"max_len must be >= 1, got {max_len}")
    scores = np.outer(p_s, p_e)
    offset = np.arange(m)[None, :] - np.arange(m)[:, None]  # e - s
    scores = np.where((offset >= 0) & (offset < max_len), scores, -np.inf)
    flat = int(np.argmax(scores))
    s, e = divmod(flat, m)
    return s, e, float(p_s[s] * p_e[e])


def check_and_select(
    dists: SpanDistributions, alpha: float, constrained: bool = True, max_len: int = 15,
) -> SpanPrediction:
    p_s, p_e = combine(dists, alpha)
    s, e, confidence = decode_span(p_s, p_e, constrained, max_len)
    return SpanPrediction(s=s, e=e, confidence=confidence)


def extract_answer(text: str, tokens: Sequence[Token], s: int, e: int) -> str:
    if not 0 <= s <= e < len(tokens):
        raise IndexError(f"span ({s}, {e}) is invalid for a passage of {len(tokens)} tokens")
    return text[tokens[s].char_start:tokens[e].char_end]


class AnswerLayer:
    def __init__(self, store: ParamStore, hidden: int, checking: bool = True):
        D = 2 * hidden
        self.checking = checking
        self.aggregate = store.bigru("answer.aggregate", D, hidden)
        self.w_s1 = store.weights("answer.w_s1", D)
        self.w_e1 = store.weights("answer.w_e1", D)
        if checking:
            self.W_align = store.matrix("answer.align.W", D, D)
            self.b_align = store.vector("answer.align.b", D)
            self.align_gru = store.bigru("answer.align", D, hidden)
            self.w_s2 = store.weights("answer.w_s2", D)
            self.w_e2 = store.weights("answer.w_e2", D)

    def heads(self, first: HopState, last: HopState) -> List[Tuple[Tensor, Tensor]]:
        """
        Голова 1 указывает по состояниям первого хода; голова 2 по последнему ходу,
        выровненному относительно итогового вектора первого хода.
        """
        heads = [point_first(first.passage, self.aggregate, self.w_s1, self.w_e1)]
        if self.checking:
            aligned = self_align(first.final, last.passage, self.W_align, self.b_align, self.align_gru)
            heads.append(point_second(aligned, self.w_s2, self.w_e2))
        return heads
