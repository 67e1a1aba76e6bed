import copy

import orjson
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hopreader.core.errors import ConfigError, DataError
from hopreader.data.metrics import em_metric, evaluate, f1_metric, normalize_answer
from hopreader.data.split import split, split_sizes
from hopreader.data.squad import load_squad, map_answer, parse_squad, to_squad
from hopreader.data.toy import build_toy_corpus, write_toy_corpus
from hopreader.lexical.tokenizer import tokenize
from hopreader.model.answer import extract_answer

CONTEXT = "Super Bowl 50 was won by the Denver Broncos."


def _corpus(*qas, context=CONTEXT):
    return {"data": [{"title": "t", "paragraphs": [{"context": context, "qas": list(qas)}]}]}


def _qa(qid, text, start, question="Who won?"):
    return {"id": qid, "question": question, "answers": [{"text": text, "answer_start": start}]}


# --- отображение ответов ---

def test_map_answer_covering_span():
    tokens = tokenize(CONTEXT)
    start = CONTEXT.index("Denver")
    span, flagged = map_answer(tokens, CONTEXT, start, "Denver Broncos")
    assert span == (7, 8)
    assert not flagged
    assert extract_answer(CONTEXT, tokens, *span) == "Denver Broncos"


def test_map_answer_at_passage_start():
    assert map_answer(tokenize(CONTEXT), CONTEXT, 0, "Super") == ((0, 0), False)


def test_map_answer_inside_token_is_flagged():
    start = CONTEXT.index("enver")
    span, flagged = map_answer(tokenize(CONTEXT), CONTEXT, start, "enver Broncos")
    assert span == (7, 8)
    assert flagged


def test_map_answer_rejects_mismatch():
    assert map_answer(tokenize(CONTEXT), CONTEXT, 3, "Broncos") == (None, False)
    assert map_answer(tokenize(CONTEXT), CONTEXT, 0, "") == (None, False)


# --- разбор корпуса ---

def test_parse_squad_counts():
    corpus = _corpus(
        _qa("q1", "Denver Broncos", CONTEXT.index("Denver")),
        _qa("q2", "Panthers", 5),
        {"id": "q3", "question": "Why?", "answers": []},
    )
    dataset = parse_squad(corpus, source="mem.json")
    assert [ex.id for ex in dataset.examples] == ["q1"]
    assert [ex.id for ex in dataset.unanswerable] == ["q2", "q3"]
    assert dataset.dropped == 1
    assert [ex.id for ex in dataset.all_examples] == ["q1", "q2", "q3"]
    assert dataset.golds["q3"] == []
    # один абзац токенизируется один раз
    assert dataset.examples[0].passage is dataset.unanswerable[0].passage


def test_parse_squad_reports_json_path():
    corpus = _corpus({"id": "q1", "answers": []})
    with pytest.raises(DataError, match=r"\$\.data\[0\]\.paragraphs\[0\]\.qas\[0\]: missing field 'question'"):
        parse_squad(corpus)
    with pytest.raises(DataError, match=r"answer_start"):
        parse_squad(_corpus({"id": "q1", "question": "?", "answers": [{"text": "x", "answer_start": "0"}]}))
    with pytest.raises(DataError, match=r"\$: missing field 'data'"):
        parse_squad({})


def test_duplicate_ids_rejected():
    corpus = _corpus(_qa("q1", "Super", 0), _qa("q1", "Bowl", 6))
    with pytest.raises(DataError, match="duplicate question id 'q1'"):
        parse_squad(corpus)


def test_to_squad_groups_paragraphs(toy_dataset):
    again = parse_squad(to_squad(toy_dataset.all_examples))
    assert [ex.id for ex in again.all_examples] == [ex.id for ex in toy_dataset.all_examples]
    assert again.golds == toy_dataset.golds


async def test_load_squad_reads_file(tmp_path):
    path = tmp_path / "train.json"
    path.write_bytes(orjson.dumps(_corpus(_qa("q1", "Super", 0))))
    dataset = await load_squad(str(path), split="dev")
    assert dataset.split == "dev"
    assert dataset.source == str(path)
    assert len(dataset) == 1


async def test_load_squad_errors(tmp_path):
    with pytest.raises(DataError, match="cannot read file"):
        await load_squad(str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{\"data\": [", encoding="utf-8")
    with pytest.raises(DataError, match="malformed JSON"):
        await load_squad(str(broken))


# --- разбиение ---

def test_split_sizes():
    assert split_sizes(10, (0.8, 0.1, 0.1)) == (8, 1, 1)
    assert split_sizes(50, (0.8, 0.1, 0.1)) == (40, 5, 5)
    assert split_sizes(1, (0.8, 0.1, 0.1)) == (1, 0, 0)
    with pytest.raises(ConfigError):
        split_sizes(10, (0.5, 0.5))
    with pytest.raises(ConfigError):
        split_sizes(10, (0.9, 0.2, -0.1))


def test_split_is_a_seeded_partition(toy_dataset):
    sub = toy_dataset.subset([ex.id for ex in toy_dataset.all_examples[:10]])
    train, dev, test = split(sub, seed=7)
    assert (len(train.all_examples), len(dev.all_examples), len(test.all_examples)) == (8, 1, 1)
    ids = [ex.id for part in (train, dev, test) for ex in part.all_examples]
    assert sorted(ids) == sorted(ex.id for ex in sub.all_examples)
    assert [test.split, dev.split] == ["test", "dev"]
    again = split(sub, seed=7)
    assert [ex.id for ex in again[0].all_examples] == [ex.id for ex in train.all_examples]


# --- метрики ---

def test_normalize_answer():
    assert normalize_answer("The  Cat!") == "cat"
    assert normalize_answer("  ") == ""
    assert normalize_answer("An apple, a day") == "apple day"


def test_em_and_f1_examples():
    assert em_metric("the Denver Broncos", ["Denver Broncos"]) == 1.0
    assert f1_metric("Denver Broncos", ["Broncos"]) == pytest.approx(2 / 3)
    assert f1_metric("Panthers", ["Broncos", "Carolina Panthers"]) == pytest.approx(2 / 3)
    assert f1_metric("", ["the"]) == 1.0
    with pytest.raises(ValueError):
        em_metric("x", [])


def test_evaluate_averages_in_percent():
    report = evaluate({"a": "Broncos", "b": "nope"}, {"a": ["Broncos"], "b": ["Panthers"]})
    assert report.em == pytest.approx(50.0)
    assert report.f1 == pytest.approx(50.0)
    assert report.total == 2


def test_evaluate_counts_missing_predictions():
    report = evaluate({"a": "Broncos"}, {"a": ["Broncos"], "b": ["Panthers"], "c": []})
    assert report.missing == ["b"]
    assert report.em == pytest.approx(50.0)
    assert report.to_json()["total"] == 2


answers = st.text(alphabet="ab c.!THE", max_size=20)


@given(answers)
def test_normalize_is_idempotent(text):
    assert normalize_answer(normalize_answer(text)) == normalize_answer(text)


@given(answers, answers)
def test_f1_symmetric_and_bounded_by_em(a, b):
    assert f1_metric(a, [b]) == pytest.approx(f1_metric(b, [a]))
    assert em_metric(a, [b]) <= f1_metric(a, [b]) <= 1.0


# --- игрушечный корпус ---

def test_toy_corpus_maps_every_answer():
    dataset = parse_squad(build_toy_corpus(), source="toy.json")
    assert len(dataset.examples) == 50
    assert not dataset.unanswerable
    assert not dataset.flagged
    for ex in dataset.examples:
        assert normalize_answer(extract_answer(ex.context, ex.passage, *ex.span)) == normalize_answer(ex.golds[0])


def test_write_toy_corpus(tmp_path):
    path = write_toy_corpus(str(tmp_path / "toy" / "toy.json"))
    assert orjson.loads(path.read_bytes()) == build_toy_corpus()


def test_annotation_does_not_change_spans(toy_corpus, tiny_config):
    from tests.conftest import build_model

    dataset = parse_squad(copy.deepcopy(toy_corpus))
    spans = [ex.span for ex in dataset.examples]
    build_model(tiny_config, dataset)
    assert [ex.span for ex in dataset.examples] == spans
    assert all(t.pos is not None for t in dataset.examples[0].passage)


# независимый переборный скорер для сверки
def _slow_normalize(text):
    punct = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~"
    stripped = "".join(ch for ch in text.lower() if ch not in punct)
    return [w for w in stripped.split() if w not in ("a", "an", "the")]


def _slow_f1(pred, gold):
    p, g = _slow_normalize(pred), _slow_normalize(gold)
    if not p or not g:
        return float(p == g)
    rest = list(g)
    same = 0
    for w in p:
        if w in rest:
            rest.remove(w)
            same += 1
    return 0.0 if same == 0 else 2.0 * same / (len(p) + len(g))


METRIC_CASES = [
    ("Denver Broncos", ["Denver Broncos"]),
    ("the Denver Broncos", ["Denver Broncos"]),
    ("Denver Broncos", ["Broncos"]),
    ("Broncos", ["Denver Broncos"]),
    ("Carolina Panthers", ["Denver Broncos"]),
    ("", ["Denver Broncos"]),
    ("", ["the"]),
    ("a", ["an"]),
    ("The Cat!", ["cat"]),
    ("cat cat cat", ["cat"]),
    ("cat dog", ["dog cat"]),
    ("New York City", ["New York", "York City", "City"]),
    ("1889", ["in 1889", "1889."]),
    ("the laws of motion", ["laws of motion"]),
    ("laws", ["the laws of motion", "motion"]),
    ("U.S. Army", ["US Army"]),
    ("rock-and-roll", ["rock and roll"]),
    ("two  million   books", ["more than two million"]),
    ("Paris, France", ["Paris", "France"]),
    ("an apple a day", ["apple day", "apples"]),
]


@pytest.mark.parametrize("prediction, golds", METRIC_CASES)
def test_metrics_match_brute_force_scorer(prediction, golds):
    expected_em = max(float(_slow_normalize(prediction) == _slow_normalize(g)) for g in golds)
    expected_f1 = max(_slow_f1(prediction, g) for g in golds)
    assert em_metric(prediction, golds) == expected_em
    assert f1_metric(prediction, golds) == pytest.approx(expected_f1, abs=1e-12)


def test_two_thirds_f1_case():
    assert f1_metric("Denver Broncos", ["Broncos"]) == pytest.approx(0.666667, abs=1e-6)
