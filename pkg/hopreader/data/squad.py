"""
Загрузка корпусов в формате SQuAD v1.1 и перевод символьных ответов в токенные спаны.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

import aiofiles
import orjson

from hopreader.core.errors import DataError
from hopreader.lexical.ngram import NGramLM
from hopreader.lexical.pipeline import annotate_pair, annotate_tokens
from hopreader.lexical.tokenizer import Token, tokenize
from utils.aiologger import log


@dataclass
class Example:
    id: str
    context: str
    question: str
    passage: List[Token]
    question_tokens: List[Token]
    answers: List[Tuple[str, int]]              # (text, answer_start)
    span: Optional[Tuple[int, int]] = None      # токенный спан первого отображаемого ответа
    flagged: bool = False                       # answer_start попал внутрь токена
    context_doc: int = 0                        # порядковый номер документа абзаца (для sidecar)
    question_doc: int = 0
    order: int = 0

    @property
    def golds(self) -> List[str]:
        return [text for text, _ in self.answers]


@dataclass
class Dataset:
    examples: List[Example] = field(default_factory=list)        # с отображаемым ответом
    unanswerable: List[Example] = field(default_factory=list)    # без ответа или с неотображаемым
    golds: Dict[str, List[str]] = field(default_factory=dict)
    source: str = ""
    split: str = "train"
    dropped: int = 0
    flagged: int = 0

    @property
    def all_examples(self) -> List[Example]:
        return sorted(self.examples + self.unanswerable, key=lambda ex: ex.order)

    @property
    def vocabulary(self) -> Set[str]:
        words: Set[str] = set()
        for ex in self.all_examples:
            words.update(t.text for t in ex.passage)
            words.update(t.text for t in ex.question_tokens)
        return words

    def contexts(self) -> List[str]:
        seen: Dict[str, None] = {}
        for ex in self.all_examples:
            seen.setdefault(ex.context, None)
        return list(seen)

    def subset(self, ids: Sequence[str], split: Optional[str] = None) -> "Dataset":
        by_id = {ex.id: ex for ex in self.all_examples}
        chosen = [by_id[i] for i in ids]
        return Dataset(
            examples=[ex for ex in chosen if ex.span is not None],
            unanswerable=[ex for ex in chosen if ex.span is None],
            golds={i: self.golds[i] for i in ids},
            source=self.source,
            split=split or self.split,
        )

    def __len__(self) -> int:
        return len(self.examples)


def map_answer(tokens: Sequence[Token], context: str, start: int, text: str) -> Tuple[Optional[Tuple[int, int]], bool]:
    """
    Минимальный покрывающий токенный спан для ответа [start, start+len(text)).
    Возвращает (span | None, flagged); flagged: начало ответа внутри токена.
    """
    end = start + len(text)
    if not text or start < 0 or context[start:end] != text:
        return None, False
    covering = [i for i, t in enumerate(tokens) if t.char_end > start and t.char_start < end]
    if not covering:
        return None, False
    s, e = covering[0], covering[-1]
    return (s, e), tokens[s].char_start != start


def _field(obj: Any, key: str, kind: Any, path: str) -> Any:
    if not isinstance(obj, dict):
        raise DataError("expected an object", path=path)
    if key not in obj:
        raise DataError(f"missing field '{key}'", path=path)
    value = obj[key]
    if kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        name = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise DataError(f"field '{key}' must be {name}", path=f"{path}.{key}")
    return value


def parse_squad(obj: Any, source: str = "", split: str = "train") -> Dataset:
    data = _field(obj, "data", list, "$")
    dataset = Dataset(source=source, split=split)
    doc = 0
    order = 0
    for a, article in enumerate(data):
        a_path = f"$.data[{a}]"
        for p, paragraph in enumerate(_field(article, "paragraphs", list, a_path)):
            p_path = f"{a_path}.paragraphs[{p}]"
            context = _field(paragraph, "context", str, p_path)
            qas = _field(paragraph, "qas", list, p_path)
            context_tokens = tokenize(context)
            context_doc = doc
            doc += 1
            for q, qa in enumerate(qas):
                q_path = f"{p_path}.qas[{q}]"
                qid = str(_field(qa, "id", (str, int), q_path))
                question = _field(qa, "question", str, q_path)
                if qid in dataset.golds:
                    raise DataError(f"duplicate question id '{qid}'", path=f"{q_path}.id")
                answers: List[Tuple[str, int]] = []
                for k, ans in enumerate(qa.get("answers", [])):
                    k_path = f"{q_path}.answers[{k}]"
                    answers.append((_field(ans, "text", str, k_path), _field(ans, "answer_start", int, k_path)))
                example = Example(
                    id=qid,
                    context=context,
                    question=question,
                    passage=context_tokens,
                    question_tokens=tokenize(question),
                    answers=answers,
                    context_doc=context_doc,
                    question_doc=doc,
                    order=order,
                )
                doc += 1
                order += 1
                dataset.golds[qid] = example.golds
                for text, start in answers:
                    span, flagged = map_answer(context_tokens, context, start, text)
                    if span is not None:
                        example.span, example.flagged = span, flagged
                        break
                if example.span is not None:
                    dataset.examples.append(example)
                    dataset.flagged += int(example.flagged)
                else:
                    dataset.unanswerable.append(example)
                    dataset.dropped += int(bool(answers))
    return dataset


async def load_squad(path: str, split: str = "train") -> Dataset:
    try:
        async with aiofiles.open(path, "rb") as f:
            raw = await f.read()
    except OSError as e:
        raise DataError(f"cannot read file: {e.strerror}", path=path) from None
    try:
        obj = orjson.loads(raw)
    except orjson.JSONDecodeError as e:
        raise DataError(f"malformed JSON: {e}", path=path) from None
    dataset = parse_squad(obj, source=path, split=split)
    if dataset.dropped:
        await log.warning(f"{path}: dropped {dataset.dropped} example(s) with unmappable answers")
    if dataset.flagged:
        await log.info(f"{path}: {dataset.flagged} answer(s) start inside a token, widened to the whole token")
    await log.info(f"Loaded {len(dataset.examples)} example(s) from <cyan>{path}</cyan> ({split})")
    return dataset


def annotate_dataset(dataset: Dataset, lm: NGramLM, sidecar: Optional[List[Dict[str, Any]]] = None) -> Dataset:
    """
    Проставляет признаки всем примерам. Документы sidecar идут в порядке чтения:
    абзац, затем его вопросы.
    """
    def record(doc: int) -> Optional[Dict[str, Any]]:
        if sidecar is None:
            return None
        if doc >= len(sidecar):
            raise DataError(f"sidecar has {len(sidecar)} documents, document #{doc} is missing")
        return sidecar[doc]

    annotated: Dict[int, List[Token]] = {}
    for ex in dataset.all_examples:
        if ex.context_doc not in annotated:
            tokens = [Token(t.text, t.char_start, t.char_end, t.lower, t.lemma) for t in ex.passage]
            annotated[ex.context_doc] = annotate_tokens(tokens, lm, record(ex.context_doc))
        ex.question_tokens = annotate_tokens(ex.question_tokens, lm, record(ex.question_doc), question=True)
        ex.passage = annotate_pair(annotated[ex.context_doc], ex.question_tokens)
    return dataset


def to_squad(examples: Sequence[Example], title: str = "hopreader") -> Dict[str, Any]:
    """Обратно в формат SQuAD; вопросы одного абзаца группируются."""
    paragraphs: Dict[str, List[Dict[str, Any]]] = {}
    for ex in examples:
        paragraphs.setdefault(ex.context, []).append({
            "id": ex.id,
            "question": ex.question,
            "answers": [{"text": text, "answer_start": start} for text, start in ex.answers],
        })
    return {
        "version": "1.1",
        "data": [{"title": title, "paragraphs": [{"context": c, "qas": qas} for c, qas in paragraphs.items()]}],
    }
