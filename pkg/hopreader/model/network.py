"""Сборка полной модели: эмбеддинги → кодировщик → ходы внимания → две головы указателей."""
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from hopreader.cache import FeatureCache, PreparedPair
from hopreader.core.config import TrainConfig
from hopreader.core.errors import CheckpointError
from hopreader.core.tensor import Tensor, no_grad
from hopreader.data.squad import Example
from hopreader.lexical.features import feature_matrix
from hopreader.model.answer import AnswerLayer, SpanDistributions, SpanPrediction, check_and_select, extract_answer
from hopreader.model.embedding import Embedder, Vocabulary
from hopreader.model.encoder import Dropout, Encoder, EncoderState, HopState, NO_DROPOUT
from hopreader.model.params import ParamStore


@dataclass
class ForwardResult:
    heads: List[Tuple[Tensor, Tensor]]
    encoder: EncoderState
    hops: List[HopState]
    e_p: Tensor
    e_q: Tensor

    def distributions(self) -> SpanDistributions:
        (p_s1, p_e1), *rest = self.heads
        if rest:
            p_s2, p_e2 = rest[0]
            return SpanDistributions(p_s1.data.copy(), p_e1.data.copy(), p_s2.data.copy(), p_e2.data.copy())
        return SpanDistributions(p_s1.data.copy(), p_e1.data.copy())


class HopReader:
    def __init__(self, config: TrainConfig, vocab: Vocabulary):
        dims = config.dims
        if vocab.dim != dims.embed:
            raise CheckpointError(f"vocabulary vectors are {vocab.dim}-d but the model expects {dims.embed}-d")
        self.config = config
        self.vocab = vocab
        self.params = ParamStore(np.random.default_rng(config.seed))
        flags = config.ablation
        self.embedder = Embedder(self.params, vocab, dims.char_dim, dims.char_width, flags.input_concat)
        self.encoder = Encoder(
            self.params,
            p_in=self.embedder.output_dim("passage"),
            q_in=self.embedder.output_dim("question"),
            hidden=dims.hidden,
            hops=config.hops,
            mode=config.similarity,
            passage_direct=flags.passage_direct,
        )
        self.answer = AnswerLayer(self.params, dims.hidden, checking=not flags.no_checking)
        self.disabled = flags.disabled_features()
        self.cache = FeatureCache()

    # --- входы ---

    def prepare(self, example: Example) -> PreparedPair:
        def build() -> PreparedPair:
            passage = self.embedder.prepare(
                [t.text for t in example.passage], feature_matrix(example.passage, "passage", self.disabled))
            question = self.embedder.prepare(
                [t.text for t in example.question_tokens],
                feature_matrix(example.question_tokens, "question", self.disabled))
            return passage, question

        return self.cache.get_or_prepare((example.id, example.question, example.context), build)

    # --- прямой проход ---

    def forward(self, example: Example, training: bool = False,
                rng: Optional[np.random.Generator] = None) -> ForwardResult:
        passage, question = self.prepare(example)
        drop = Dropout(self.config.dropout, training, rng) if training else NO_DROPOUT
        e_p = self.embedder.embed(passage, "passage")
        e_q = self.embedder.embed(question, "question")
        state = self.encoder.encode(e_p, e_q, drop)
        hops = self.encoder.interact(state, drop)
        heads = self.answer.heads(hops[0], hops[-1])
        return ForwardResult(heads=heads, encoder=state, hops=hops, e_p=e_p, e_q=e_q)

    def distributions(self, example: Example) -> SpanDistributions:
        with no_grad():
            return self.forward(example).distributions()

    def predict(
        self,
        example: Example,
        alpha: Optional[float] = None,
        constrained: Optional[bool] = None,
        max_len: Optional[int] = None,
        dists: Optional[SpanDistributions] = None,
    ) -> SpanPrediction:
        cfg = self.config
        dists = dists if dists is not None else self.distributions(example)
        pred = check_and_select(
            dists,
            alpha=cfg.alpha if alpha is None else alpha,
            constrained=cfg.constrained if constrained is None else constrained,
            max_len=cfg.max_len if max_len is None else max_len,
        )
        # при буквальном argmax конец может оказаться левее начала: ответ пустой
        if pred.s <= pred.e:
            pred.answer_text = extract_answer(example.context, example.passage, pred.s, pred.e)
        return pred

    # --- веса ---

    def state_dict(self) -> Dict[str, np.ndarray]:
        return self.params.state_dict()

    def load_state(self, state: Mapping[str, np.ndarray]) -> None:
        self.params.load_state(state)

    @contextmanager
    def using(self, weights: Mapping[str, np.ndarray]) -> Iterator["HopReader"]:
        """Временно подставляет другие веса (например, EMA-тень для оценки)."""
        saved = self.state_dict()
        self.load_state(weights)
        try:
            yield self
        finally:
            self.load_state(saved)
