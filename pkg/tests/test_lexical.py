import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hopreader.core.errors import DataError
from hopreader.lexical.features import (
    PASSAGE_DIM, PASSAGE_LAYOUT, QTYPE_INDEX, QUESTION_DIM, QUESTION_LAYOUT, build_feature_vector,
    exact_match, feature_matrix, question_type, term_frequency,
)
from hopreader.lexical.lemmatizer import lemmatize
from hopreader.lexical.ngram import S_MAX, NGramLM, surprisal, train_lm
from hopreader.lexical.pipeline import annotate_document, annotate_pair, train_passage_lm
from hopreader.lexical.tagger import NER_INDEX, POS_INDEX, annotate_pos_ner
from hopreader.lexical.tokenizer import detokenize, tokenize


# --- токенизация ---

def test_tokenize_offsets():
    text = "The Denver Broncos won Super Bowl 50."
    tokens = tokenize(text)
    assert [t.text for t in tokens] == ["The", "Denver", "Broncos", "won", "Super", "Bowl", "50", "."]
    for t in tokens:
        assert text[t.char_start:t.char_end] == t.text
    assert tokens[1].lower == "denver"


def test_tokenize_keeps_abbreviations_and_numbers():
    assert [t.text for t in tokenize("The U.S. paid 3,000.50 dollars")] == ["The", "U.S.", "paid", "3,000.50", "dollars"]


def test_tokenize_keeps_ordinals_whole():
    text = "It was built in the 3rd century and rebuilt in the 1990s."
    assert [t.text for t in tokenize(text)][5:7] == ["3rd", "century"]
    assert "1990s" in [t.text for t in tokenize(text)]
    passage = tokenize("the 3rd century")
    flags = exact_match(passage, tokenize("Which 3rd century king ?"))
    assert flags[1] == (1, 1, 1)


@settings(max_examples=200)
@given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=60))
def test_detokenize_round_trip(text):
    tokens = tokenize(text)
    assert detokenize(text, tokens) == text
    assert all(t.char_start < t.char_end for t in tokens)
    assert all(a.char_end <= b.char_start for a, b in zip(tokens, tokens[1:]))


# --- лемматизация и теги ---

@pytest.mark.parametrize("word,lemma", [
    ("was", "be"), ("children", "child"), ("cities", "city"), ("running", "run"),
    ("boxes", "box"), ("played", "play"), ("cat", "cat"), ("news", "news"),
])
def test_lemmatize(word, lemma):
    assert lemmatize(word) == lemma


def test_heuristic_tags():
    tokens = annotate_pos_ner(tokenize("Marie Curie was born in Warsaw ."))
    assert tokens[0].ner == NER_INDEX["PER"]
    assert tokens[5].ner == NER_INDEX["LOC"]
    assert tokens[2].pos == POS_INDEX["VERB"]
    assert tokens[4].pos == POS_INDEX["ADP"]
    assert tokens[6].pos == POS_INDEX["PUNCT"]


def test_sidecar_tags_win():
    tokens = tokenize("Apple rises")
    annotate_pos_ner(tokens, {"pos": ["PROPN", "VERB"], "ner": ["B-ORG", "O"], "lemma": ["apple", "rise"]})
    assert tokens[0].pos == POS_INDEX["NOUN"]
    assert tokens[0].ner == NER_INDEX["ORG"]
    assert tokens[1].lemma == "rise"


def test_sidecar_length_mismatch_names_counts():
    with pytest.raises(DataError, match="3 entries but the document has 2 tokens"):
        annotate_pos_ner(tokenize("two words"), {"pos": ["NOUN", "NOUN", "NOUN"]})


def test_sidecar_unknown_tag():
    with pytest.raises(DataError):
        annotate_pos_ner(tokenize("word"), {"pos": ["BANANA"]})


# --- признаки ---

def test_term_frequency():
    tokens = tokenize("the cat and The dog")
    assert term_frequency(tokens) == pytest.approx([0.4, 0.2, 0.2, 0.4, 0.2])
    assert term_frequency([]) == []


def test_exact_match_flags():
    passage = tokenize("Cats were running")
    question = tokenize("Was the cat running ?")
    flags = exact_match(passage, question)
    assert flags[0] == (0, 0, 1)   # cats -> cat по лемме
    assert flags[1] == (0, 0, 1)   # were/was -> be
    assert flags[2] == (1, 1, 1)


@pytest.mark.parametrize("question,qtype", [
    ("What is the capital ?", "what"),
    ("In what year did it open ?", "what"),
    ("Who wrote Hamlet ?", "who"),
    ("Is Paris in France ?", "be"),
    ("Did the team win ?", "be"),
    ("Name the river", "other-wh"),
    ("The river was called what ?", "what"),
    ("Tell me the year", "OTHER"),
])
def test_question_type(question, qtype):
    tokens = tokenize(question)
    assert question_type(tokens) == QTYPE_INDEX[qtype]
    assert all(t.qtype == QTYPE_INDEX[qtype] for t in tokens)


def _annotated_pair():
    passages = ["Paris is the capital of France .", "Berlin is large ."]
    lm = train_passage_lm(passages)
    passage = annotate_document(passages[0], lm)
    question = annotate_document("What is the capital of France ?", lm, question=True)
    return annotate_pair(passage, question), question


def test_feature_vector_layout():
    passage, question = _annotated_pair()
    p = build_feature_vector(passage[0], "passage")
    q = build_feature_vector(question[0], "question")
    assert p.shape == (PASSAGE_DIM,) and PASSAGE_DIM == 22
    assert q.shape == (QUESTION_DIM,) and QUESTION_DIM == 31
    assert p[PASSAGE_LAYOUT["pos"]].sum() == 1.0
    assert p[PASSAGE_LAYOUT["ner"]].sum() == 1.0
    assert q[QUESTION_LAYOUT["qtype"]][QTYPE_INDEX["what"]] == 1.0
    assert 0.0 <= p[PASSAGE_LAYOUT["surprisal"]][0] <= 1.0


def test_disabled_features_are_zeroed():
    passage, question = _annotated_pair()
    p = build_feature_vector(passage[3], "passage", frozenset({"em", "pos"}))
    assert not p[PASSAGE_LAYOUT["em"]].any()
    assert not p[PASSAGE_LAYOUT["pos"]].any()
    assert p[PASSAGE_LAYOUT["ner"]].sum() == 1.0
    q = feature_matrix(question, "question", frozenset({"qtype"}))
    assert not q[:, QUESTION_LAYOUT["qtype"]].any()


def test_annotate_pair_does_not_touch_shared_tokens():
    passages = ["Rivers flow ."]
    lm = train_passage_lm(passages)
    passage = annotate_document(passages[0], lm)
    own = annotate_pair(passage, annotate_document("Do rivers flow ?", lm, question=True))
    assert passage[0].em is None
    assert own[0].em == (0, 1, 1)


def test_missing_feature_is_reported():
    with pytest.raises(DataError, match="no 'pos' feature"):
        build_feature_vector(tokenize("word")[0], "passage")


# --- языковая модель ---

def test_add_k_probabilities():
    lm = train_lm([["a", "b", "a"]], order=2, k=1.0)
    # V = {a, b} + <unk> = 3;  P(a) = (2+1)/(3+3)
    assert lm.prob("a") == pytest.approx(0.5)
    # после "a" один раз шло "b": (1+1)/(1+3)
    assert lm.prob("b", ["a"]) == pytest.approx(0.5)
    assert lm.prob("zzz", ["a"]) == pytest.approx(0.25)


def test_probabilities_sum_to_one_over_vocab():
    lm = train_lm([["x", "y", "z", "x"]], order=2, k=0.5)
    total = sum(lm.prob(w, ["x"]) for w in ["x", "y", "z", "<unk>"])
    assert total == pytest.approx(1.0)


def test_surprisal_clipped():
    lm = train_lm([["a", "b"]], order=2, k=0.0)
    values = surprisal(["a", "q"], lm)
    assert values[0] == pytest.approx(-math.log(0.5))
    assert values[1] == S_MAX


def test_lm_count_file_round_trip(tmp_path):
    lm = train_lm([["the", "cat", "sat"], ["the", "dog"]], order=3, k=0.1)
    path = tmp_path / "lm.counts"
    lm.save(str(path))
    loaded = NGramLM.load(str(path))
    assert loaded.order == 3 and loaded.k == 0.1
    for word, hist in [("cat", ["the"]), ("sat", ["the", "cat"]), ("dog", []), ("owl", ["the"])]:
        assert loaded.prob(word, hist) == lm.prob(word, hist)


def test_lm_errors():
    with pytest.raises(ValueError):
        train_lm([[]])
    with pytest.raises(RuntimeError):
        NGramLM().prob("a")
    with pytest.raises(DataError):
        NGramLM.from_text("no tabs here\n")


def test_annotate_document_sets_every_feature():
    lm = train_passage_lm(["A short passage ."])
    tokens = annotate_document("A short passage .", lm)
    for t in tokens:
        assert t.pos is not None and t.ner is not None
        assert t.tf is not None and t.surprisal is not None
    matrix = feature_matrix(annotate_pair(tokens, annotate_document("short ?", lm, question=True)), "passage")
    assert matrix.shape == (4, PASSAGE_DIM)
    assert np.isfinite(matrix).all()
