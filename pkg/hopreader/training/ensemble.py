import copy
from typing import Dict, List, Optional, Sequence, Tuple

from hopreader.data.squad import Dataset, Example, annotate_dataset
from hopreader.model.answer import SpanPrediction, extract_answer
from hopreader.model.network import HopReader
from hopreader.training.checkpoint import Checkpoint


def pool_proposals(proposals: Sequence[SpanPrediction]) -> SpanPrediction:
    """
    Одинаковые спаны складывают уверенность; побеждает наибольшая сумма,
    при равенстве меньший s, затем меньший e.
    """
    if not proposals:
        raise ValueError("ensemble needs at least one proposal")
    pooled: Dict[Tuple[int, int], float] = {}
    for p in proposals:
        pooled[(p.s, p.e)] = pooled.get((p.s, p.e), 0.0) + p.confidence
    (s, e), score = min(pooled.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1]))
    return SpanPrediction(s=s, e=e, confidence=score)


def _answer(example: Example, best: SpanPrediction) -> SpanPrediction:
    if best.s <= best.e:
        best.answer_text = extract_answer(example.context, example.passage, best.s, best.e)
    return best


def ensemble_predict(
    models: Sequence[HopReader],
    example: Example,
    alpha: Optional[float] = None,
    constrained: Optional[bool] = None,
    max_len: Optional[int] = None,
) -> SpanPrediction:
    if not models:
        raise ValueError("ensemble needs at least one model")
    proposals = [m.predict(example, alpha=alpha, constrained=constrained, max_len=max_len) for m in models]
    return _answer(example, pool_proposals(proposals))


def ensemble_predict_dataset(
    checkpoints: Sequence[Checkpoint],
    dataset: Dataset,
    alpha: Optional[float] = None,
    constrained: Optional[bool] = None,
    max_len: Optional[int] = None,
) -> Dict[str, str]:
    """
    Каждая контрольная точка размечает свою копию данных своей LM
    (признаки зависят от корпуса, на котором она обучалась), затем спаны пулятся по id.
    """
    if not checkpoints:
        raise ValueError("ensemble needs at least one checkpoint")
    proposals: Dict[str, List[SpanPrediction]] = {}
    for ckpt in checkpoints:
        local = annotate_dataset(copy.deepcopy(dataset), ckpt.lm)
        model = ckpt.build_model()
        for ex in local.all_examples:
            proposals.setdefault(ex.id, []).append(
                model.predict(ex, alpha=alpha, constrained=constrained, max_len=max_len))
    return {
        ex.id: _answer(ex, pool_proposals(proposals[ex.id])).answer_text
        for ex in dataset.all_examples
    }
