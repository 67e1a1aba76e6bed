"""
Набор проверок градиентов: каждая дифференцируемая операция по одному разу
плюс вся модель на игрушечных размерах (профиль gradcheck).
"""
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from hopreader.core.config import TrainConfig
from hopreader.core.errors import GradientCheckFailed
from hopreader.core.gradcheck import CheckResult, check_gradients
from hopreader.core.recurrent import bigru, gru_cell
from hopreader.core import tensor as T
from hopreader.core.tensor import Tensor, parameter
from hopreader.data.squad import annotate_dataset, parse_squad
from hopreader.lexical.pipeline import train_passage_lm
from hopreader.model.answer import pointer, self_align
from hopreader.model.embedding import Embedder, Vocabulary, fuse, lexical_gate
from hopreader.model.encoder import HopParams, attend_question, fuse_hop, gate_passage_inputs, similarity
from hopreader.model.network import HopReader
from hopreader.model.params import ParamStore
from hopreader.training.loss import heads_loss, objective, span_loss

OP_THRESHOLD = 1e-5
MODEL_THRESHOLD = 1e-4
CORRUPT_FACTOR = 1.1
MODEL_SAMPLES = 3

# (функция -> скаляр, проверяемые тензоры, число координат на тензор)
Case = Tuple[Callable[[], Tensor], Sequence[Tensor], Optional[int]]

TOY_CORPUS = {
    "data": [{
        "title": "gradcheck",
        "paragraphs": [{
            "context": "Paris is nice",
            "qas": [{"id": "gradcheck-0", "question": "Where Paris",
                     "answers": [{"text": "Paris", "answer_start": 0}]}],
        }],
    }],
}


def _param(rng: np.random.Generator, *shape: int, low: float = -1.0, high: float = 1.0) -> Tensor:
    return parameter(rng.uniform(low, high, size=shape))


def _projected(rng: np.random.Generator, build: Callable[[], Tensor]) -> Callable[[], Tensor]:
    """Фиксирует случайную проекцию один раз, чтобы каждый вызов считал одну и ту же функцию."""
    weights = Tensor(rng.standard_normal(build().shape))
    return lambda: (build() * weights).sum()


def _elementwise_cases(rng: np.random.Generator) -> Dict[str, Case]:
    a, b = _param(rng, 3, 4), _param(rng, 3, 4)
    pos = _param(rng, 3, 4, low=0.5, high=2.0)
    cases: Dict[str, Case] = {}
    for kind in ("add", "sub", "mul"):
        cases[kind] = (_projected(rng, lambda k=kind: T.elementwise(k, a, b)), [a, b], None)
    for kind in ("sigmoid", "tanh", "exp"):
        cases[kind] = (_projected(rng, lambda k=kind: T.elementwise(k, a)), [a], None)
    cases["log"] = (_projected(rng, lambda: T.log(pos)), [pos], None)
    return cases


def _tensor_cases(rng: np.random.Generator) -> Dict[str, Case]:
    a, b, v = _param(rng, 3, 4), _param(rng, 4, 2), _param(rng, 4)
    c = _param(rng, 2, 4)
    idx = np.array([2, 0, 2])
    mask_seed = int(rng.integers(1 << 31))
    return {
        "matmul": (_projected(rng, lambda: T.matmul(a, b) + T.matmul(a, v).reshape(3, 1)), [a, b, v], None),
        "transpose": (_projected(rng, lambda: T.transpose(a)), [a], None),
        "reshape": (_projected(rng, lambda: T.reshape(a, (2, 6))), [a], None),
        "getitem": (_projected(rng, lambda: a[1:, ::2]), [a], None),
        "take_rows": (_projected(rng, lambda: T.take_rows(a, idx)), [a], None),
        "sum": (_projected(rng, lambda: T.tsum(a, axis=0) + T.tsum(a)), [a], None),
        "mean": (lambda: T.mean(a * a), [a], None),
        "max": (_projected(rng, lambda: T.tmax(a, axis=1)), [a], None),
        "softmax": (_projected(rng, lambda: T.softmax(a, axis=1)), [a], None),
        "concat": (_projected(rng, lambda: T.concat([a, c], axis=0)), [a, c], None),
        "stack": (_projected(rng, lambda: T.stack([a[0], c[1]])), [a, c], None),
        # одна и та же маска при каждом вызове
        "dropout": (_projected(rng, lambda: T.dropout(a, 0.3, True, np.random.default_rng(mask_seed))), [a], None),
    }


def _recurrent_cases(rng: np.random.Generator) -> Dict[str, Case]:
    store = ParamStore(rng)
    cell = store.gru("cell", 3, 4)
    bi = store.bigru("bi", 3, 2)
    x, h = _param(rng, 3), _param(rng, 4)
    seq = _param(rng, 4, 3)

    def bigru_out() -> Tensor:
        states, final = bigru(seq, *bi)
        return T.concat([states.reshape(16), final])

    return {
        "gru_cell": (_projected(rng, lambda: gru_cell(x, h, cell)), [x, h, *cell.tensors()], None),
        "bigru": (_projected(rng, bigru_out), [seq, *bi[0].tensors(), *bi[1].tensors()], None),
    }


def _embedding_cases(rng: np.random.Generator) -> Dict[str, Case]:
    vocab = Vocabulary.build(["cab", "a"], dim=4, seed=0)
    store = ParamStore(rng)
    embedder = Embedder(store, vocab, char_dim=3, width=2)
    feats = Tensor(rng.uniform(0.0, 1.0, size=(3, 5)))
    W, b = _param(rng, 4, 5), _param(rng, 4)
    word, char, gate = _param(rng, 3, 4), _param(rng, 3, 4), _param(rng, 3, 4, low=0.05, high=0.95)
    return {
        "char_encode": (_projected(rng, lambda: embedder.char_encode("cab")),
                        [embedder.chars, embedder.filters, embedder.filter_bias], None),
        "lexical_gate": (_projected(rng, lambda: lexical_gate(feats, W, b)), [W, b], None),
        "fuse": (_projected(rng, lambda: fuse(word, char, gate)), [word, char, gate], None),
    }


def _interaction_cases(rng: np.random.Generator) -> Dict[str, Case]:
    hidden, m, n, p_in = 2, 3, 2, 5
    D = 2 * hidden
    store = ParamStore(rng)
    q1, e_p = _param(rng, D), _param(rng, m, p_in)
    W_g, b_g, beta_W, beta_b = _param(rng, p_in, D), _param(rng, p_in), _param(rng, p_in, D), _param(rng, p_in)
    P, Q = _param(rng, m, D), _param(rng, n, D)
    hop = HopParams(_param(rng, D), _param(rng, D), _param(rng, D), fusion=store.bigru("fusion", 4 * D, hidden))
    S = _param(rng, m, n)
    attended = _param(rng, m, D)
    summary = _param(rng, D)
    W_a, b_a = _param(rng, D, D), _param(rng, D)
    align_gru = store.bigru("align", D, hidden)
    w_s, w_e = _param(rng, D), _param(rng, D)

    def fused() -> Tensor:
        states, final = fuse_hop(P, attended, hop.fusion)
        return T.concat([states.reshape(m * D), final])

    def pointed() -> Tensor:
        p_s, p_e = pointer(P, w_s, w_e)
        return T.concat([p_s, p_e])

    fusion_params = [*hop.fusion[0].tensors(), *hop.fusion[1].tensors()]
    align_params = [*align_gru[0].tensors(), *align_gru[1].tensors()]
    return {
        "gate_passage_inputs": (_projected(rng, lambda: gate_passage_inputs(q1, e_p, W_g, b_g, beta_W, beta_b)),
                                [q1, e_p, W_g, b_g, beta_W, beta_b], None),
        "similarity": (_projected(rng, lambda: similarity(P, Q, hop)), [P, Q, hop.w_p, hop.w_q, hop.w_pq], None),
        "attend_question": (_projected(rng, lambda: attend_question(S, Q)[1]), [S, Q], None),
        "fuse_hop": (_projected(rng, fused), [P, attended, *fusion_params], None),
        "self_align": (_projected(rng, lambda: self_align(summary, P, W_a, b_a, align_gru)),
                       [summary, P, W_a, b_a, *align_params], None),
        "pointer": (_projected(rng, pointed), [P, w_s, w_e], None),
    }


def _loss_cases(rng: np.random.Generator) -> Dict[str, Case]:
    x_s, x_e = _param(rng, 4), _param(rng, 4)
    params = [_param(rng, 3, 2), _param(rng, 2)]
    return {
        "span_loss": (lambda: span_loss(T.softmax(x_s, axis=0), T.softmax(x_e, axis=0), 1, 2)[0], [x_s, x_e], None),
        "objective": (lambda: objective(T.tsum(params[0]) * 0.5, params, 0.1), params, None),
    }


def toy_model(config: TrainConfig):
    """Модель и пример из одного абзаца: m=3 слова абзаца, n=2 слова вопроса."""
    dataset = parse_squad(TOY_CORPUS, source="<gradcheck>")
    lm = train_passage_lm(dataset.contexts(), order=config.lm_order, k=config.lm_k)
    annotate_dataset(dataset, lm)
    vocab = Vocabulary.build(dataset.vocabulary, config.dims.embed, config.seed)
    return HopReader(config, vocab), dataset.examples[0]


def _model_case(config: TrainConfig) -> Case:
    model, example = toy_model(config.with_overrides(dropout=0.0))
    params = model.params.tensors()

    def fn() -> Tensor:
        result = model.forward(example, training=False)
        loss, _ = heads_loss(result.heads, example.span)
        return objective(loss, params, config.l2)

    return fn, params, MODEL_SAMPLES


def run_gradient_suite(
    config: TrainConfig,
    seed: int = 0,
    corrupt: Optional[str] = None,
    only: Optional[Sequence[str]] = None,
) -> List[CheckResult]:
    """
    corrupt: имя операции (или "all"), у которой аналитический градиент
    умножается на CORRUPT_FACTOR.
    """
    rng = np.random.default_rng(seed)
    cases: Dict[str, Tuple[Case, float]] = {}
    for group in (_elementwise_cases, _tensor_cases, _recurrent_cases, _embedding_cases,
                  _interaction_cases, _loss_cases):
        for name, case in group(rng).items():
            cases[name] = (case, OP_THRESHOLD)
    if only is None or "full_model" in only:
        cases["full_model"] = (_model_case(config), MODEL_THRESHOLD)

    results: List[CheckResult] = []
    for name, ((fn, tensors, samples), threshold) in cases.items():
        if only is not None and name not in only:
            continue
        factor = CORRUPT_FACTOR if corrupt in (name, "all") else 1.0
        worst, checked = check_gradients(fn, tensors, samples=samples, rng=rng, corrupt=factor)
        results.append(CheckResult(name=name, max_rel_err=worst, threshold=threshold, checked=checked))
    return results


def operation_names() -> List[str]:
    rng = np.random.default_rng(0)
    names: List[str] = []
    for group in (_elementwise_cases, _tensor_cases, _recurrent_cases, _embedding_cases,
                  _interaction_cases, _loss_cases):
        names.extend(group(rng))
    return names + ["full_model"]


def assert_passed(results: Sequence[CheckResult]) -> None:
    failed = [r for r in results if not r.passed]
    if failed:
        detail = ", ".join(f"{r.name} ({r.max_rel_err:.2e} >= {r.threshold:.0e})" for r in failed)
        raise GradientCheckFailed(f"gradient check failed for: {detail}")
