import copy
from typing import Any, Dict, Iterable, List, Optional

from hopreader.lexical.features import exact_match, question_type, term_frequency
from hopreader.lexical.ngram import NGramLM
from hopreader.lexical.tagger import annotate_pos_ner
from hopreader.lexical.tokenizer import Token, tokenize


def annotate_tokens(
    tokens: List[Token],
    lm: NGramLM,
    annotation: Optional[Dict[str, Any]] = None,
    question: bool = False,
) -> List[Token]:
    annotate_pos_ner(tokens, annotation)
    term_frequency(tokens)
    for tok, s in zip(tokens, lm.surprisal([t.lower for t in tokens])):
        tok.surprisal = s
    if question and tokens:
        question_type(tokens)
    return tokens


def annotate_document(
    text: str,
    lm: NGramLM,
    annotation: Optional[Dict[str, Any]] = None,
    question: bool = False,
) -> List[Token]:
    """
    Полная разметка одного документа: токены, pos/ner (sidecar побеждает),
    tf, surprisal по корпусной LM с историей внутри документа, qtype для вопросов.
    exact_match зависит от пары документов и ставится отдельно через annotate_pair.
    """
    return annotate_tokens(tokenize(text), lm, annotation, question)


def annotate_pair(passage: List[Token], question: List[Token]) -> List[Token]:
    """Копия токенов абзаца с флагами совпадения для конкретного вопроса."""
    own = [copy.copy(t) for t in passage]
    exact_match(own, question)
    return own


def lm_corpus(passages: Iterable[str]) -> List[List[str]]:
    """Токенизированные абзацы для обучения LM (нижний регистр)."""
    return [[t.lower for t in tokenize(text)] for text in passages]


def train_passage_lm(passages: Iterable[str], order: int = 2, k: float = 0.1) -> NGramLM:
    return NGramLM.train(lm_corpus(passages), order=order, k=k)
