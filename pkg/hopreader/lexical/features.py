"""Лексические признаки токенов и сборка векторов E_vp / E_vq."""
from collections import Counter
from typing import FrozenSet, List, Sequence, Tuple

import numpy as np

from hopreader.core.errors import DataError
from hopreader.lexical.ngram import S_MAX
from hopreader.lexical.tagger import NER_TAGS, POS_TAGS
from hopreader.lexical.tokenizer import Token

QTYPES = ("what", "how", "who", "when", "which", "where", "why", "whose", "whom", "be", "other-wh", "OTHER")
QTYPE_INDEX = {name: i for i, name in enumerate(QTYPES)}

_WH_WORDS = {"what", "how", "who", "when", "which", "where", "why", "whose", "whom"}
_BE_VERBS = {"is", "are", "was", "were", "am", "be", "been", "being",
             "do", "does", "did", "can", "could", "will", "would", "has", "have", "had", "should"}
_OTHER_WH = {"name", "whatever", "whichever", "whoever", "wherever", "whenever", "however", "whither", "whence"}

N_POS = len(POS_TAGS)
N_NER = len(NER_TAGS)
N_QTYPE = len(QTYPES)

# Раскладка блоков: имя -> срез в векторе
PASSAGE_LAYOUT = {
    "pos": slice(0, N_POS),
    "ner": slice(N_POS, N_POS + N_NER),
    "tf": slice(N_POS + N_NER, N_POS + N_NER + 1),
    "em": slice(N_POS + N_NER + 1, N_POS + N_NER + 4),
    "surprisal": slice(N_POS + N_NER + 4, N_POS + N_NER + 5),
}
QUESTION_LAYOUT = {
    "pos": slice(0, N_POS),
    "ner": slice(N_POS, N_POS + N_NER),
    "tf": slice(N_POS + N_NER, N_POS + N_NER + 1),
    "surprisal": slice(N_POS + N_NER + 1, N_POS + N_NER + 2),
    "qtype": slice(N_POS + N_NER + 2, N_POS + N_NER + 2 + N_QTYPE),
}
PASSAGE_DIM = PASSAGE_LAYOUT["surprisal"].stop    # 22
QUESTION_DIM = QUESTION_LAYOUT["qtype"].stop      # 31


def feature_dim(side: str) -> int:
    if side == "passage":
        return PASSAGE_DIM
    if side == "question":
        return QUESTION_DIM
    raise ValueError(f"side must be 'passage' or 'question', got {side!r}")


def term_frequency(tokens: List[Token]) -> List[float]:
    """tf(w) = count(lower(w)) / len(tokens) внутри одного документа."""
    if not tokens:
        return []
    counts = Counter(t.lower for t in tokens)
    total = len(tokens)
    values = []
    for tok in tokens:
        tok.tf = counts[tok.lower] / total
        values.append(tok.tf)
    return values


def exact_match(passage: List[Token], question: Sequence[Token]) -> List[Tuple[int, int, int]]:
    surfaces = {t.text for t in question}
    lowers = {t.lower for t in question}
    lemmas = {t.lemma for t in question}
    flags = []
    for tok in passage:
        tok.em = (int(tok.text in surfaces), int(tok.lower in lowers), int(tok.lemma in lemmas))
        flags.append(tok.em)
    return flags


def _qtype_of(word: str, position: int) -> int:
    if word in _WH_WORDS:
        return QTYPE_INDEX[word]
    if word in _OTHER_WH:
        return QTYPE_INDEX["other-wh"]
    if position == 0 and word in _BE_VERBS:
        return QTYPE_INDEX["be"]
    return -1


def question_type(question: List[Token]) -> int:
    """
    Тип вопроса: сначала первые два токена, потом весь вопрос; иначе OTHER.
    Найденный id проставляется всем токенам вопроса.
    """
    words = [t.lower for t in question]
    qtype = QTYPE_INDEX["OTHER"]
    for i, w in enumerate(words[:2]):
        found = _qtype_of(w, i)
        if found >= 0:
            qtype = found
            break
    else:
        for w in words[2:]:
            if w in _WH_WORDS:
                qtype = QTYPE_INDEX[w]
                break
    for tok in question:
        tok.qtype = qtype
    return qtype


def _require(token: Token, field: str):
    value = getattr(token, field)
    if value is None:
        raise DataError(f"token '{token.text}' at {token.char_start} has no '{field}' feature")
    return value


def build_feature_vector(token: Token, side: str, disabled: FrozenSet[str] = frozenset()) -> np.ndarray:
    """
    passage: pos(12) ⊕ ner(5) ⊕ tf ⊕ em(3) ⊕ surprisal/S_MAX  -> 22
    question: pos(12) ⊕ ner(5) ⊕ tf ⊕ surprisal/S_MAX ⊕ qtype(12) -> 31
    Блоки из `disabled` обнуляются (абляция признаков).
    """
    layout = PASSAGE_LAYOUT if side == "passage" else QUESTION_LAYOUT
    vec = np.zeros(feature_dim(side), dtype=np.float64)
    vec[layout["pos"].start + _require(token, "pos")] = 1.0
    vec[layout["ner"].start + _require(token, "ner")] = 1.0
    vec[layout["tf"]] = _require(token, "tf")
    vec[layout["surprisal"]] = _require(token, "surprisal") / S_MAX
    if side == "passage":
        vec[layout["em"]] = _require(token, "em")
    else:
        vec[layout["qtype"].start + _require(token, "qtype")] = 1.0
    for feature in disabled:
        if feature in layout:
            vec[layout[feature]] = 0.0
    return vec


def feature_matrix(tokens: Sequence[Token], side: str, disabled: FrozenSet[str] = frozenset()) -> np.ndarray:
    dim = feature_dim(side)
    if not tokens:
        return np.zeros((0, dim))
    return np.stack([build_feature_vector(t, side, disabled) for t in tokens])
