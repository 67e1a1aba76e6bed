"""EM/F1 в соглашениях официального скрипта оценки SQuAD v1.1."""
import re
import string
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Sequence

_PUNCT = set(string.punctuation)
_ARTICLES = re.compile(r"\b(a|an|the)\b")


def normalize_answer(text: str) -> str:
    """Нижний регистр, без пунктуации и артиклей a/an/the, пробелы схлопнуты."""
    text = text.lower()
    text = "".join(ch for ch in text if ch not in _PUNCT)
    text = _ARTICLES.sub(" ", text)
    return " ".join(text.split())


def _em(prediction: str, gold: str) -> float:
    return float(normalize_answer(prediction) == normalize_answer(gold))


def _f1(prediction: str, gold: str) -> float:
    pred_tokens = normalize_answer(prediction).split()
    gold_tokens = normalize_answer(gold).split()
    if not pred_tokens or not gold_tokens:
        return float(pred_tokens == gold_tokens)
    common = Counter(pred_tokens) & Counter(gold_tokens)
    same = sum(common.values())
    if same == 0:
        return 0.0
    precision = same / len(pred_tokens)
    recall = same / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def _max_over_golds(fn: Callable[[str, str], float], prediction: str, golds: Sequence[str]) -> float:
    if not golds:
        raise ValueError("at least one gold answer is required")
    return max(fn(prediction, g) for g in golds)


def em_metric(prediction: str, golds: Sequence[str]) -> float:
    return _max_over_golds(_em, prediction, golds)


def f1_metric(prediction: str, golds: Sequence[str]) -> float:
    return _max_over_golds(_f1, prediction, golds)


@dataclass
class EvalRecord:
    id: str
    prediction: str
    golds: List[str]
    em: float
    f1: float


@dataclass
class EvalReport:
    em: float
    f1: float
    records: List[EvalRecord] = field(default_factory=list)
    missing: List[str] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.records)

    def to_json(self) -> Dict[str, Any]:
        return {
            "exact_match": self.em,
            "f1": self.f1,
            "total": self.total,
            "missing": self.missing,
            "examples": [
                {"id": r.id, "prediction": r.prediction, "golds": r.golds, "em": r.em, "f1": r.f1}
                for r in self.records
            ],
        }


def evaluate(predictions: Mapping[str, str], golds: Mapping[str, Sequence[str]]) -> EvalReport:
    """
    Макро-среднее EM/F1 в процентах. Вопрос без предсказания получает 0 и попадает в `missing`.
    Вопросы без эталонных ответов не оцениваются.
    """
    records: List[EvalRecord] = []
    missing: List[str] = []
    for qid in sorted(golds):
        answers = list(golds[qid])
        if not answers:
            continue
        if qid not in predictions:
            missing.append(qid)
            records.append(EvalRecord(qid, "", answers, 0.0, 0.0))
            continue
        pred = predictions[qid]
        records.append(EvalRecord(qid, pred, answers, em_metric(pred, answers), f1_metric(pred, answers)))
    if not records:
        return EvalReport(em=0.0, f1=0.0, missing=missing)
    em = 100.0 * sum(r.em for r in records) / len(records)
    f1 = 100.0 * sum(r.f1 for r in records) / len(records)
    return EvalReport(em=em, f1=f1, records=records, missing=missing)
