import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hopreader.core.config import ALPHA_GRID
from hopreader.core.errors import ConfigError, ShapeError
from hopreader.core.tensor import Tensor
from hopreader.lexical.tokenizer import tokenize
from hopreader.model.answer import (
    SpanDistributions, align_inputs, check_and_select, combine, decode_span, extract_answer, point_first,
)
from hopreader.model.params import ParamStore


def test_combine_weights_second_head():
    dists = SpanDistributions(
        p_s1=np.array([0.1, 0.9]), p_e1=np.array([0.5, 0.5]),
        p_s2=np.array([0.8, 0.2]), p_e2=np.array([0.5, 0.5]),
    )
    p_s, p_e = combine(dists, 1.5)
    np.testing.assert_allclose(p_s, [1.3, 1.2], atol=1e-12)
    np.testing.assert_allclose(p_e, [1.25, 1.25], atol=1e-12)
    assert check_and_select(dists, 1.5).s == 0


def test_combine_single_head_passes_through():
    dists = SpanDistributions(p_s1=np.array([0.3, 0.7]), p_e1=np.array([0.6, 0.4]))
    p_s, p_e = combine(dists, 2.0)
    np.testing.assert_array_equal(p_s, dists.p_s1)
    np.testing.assert_array_equal(p_e, dists.p_e1)


def test_combine_rejects_small_alpha():
    dists = SpanDistributions(p_s1=np.array([1.0]), p_e1=np.array([1.0]))
    with pytest.raises(ConfigError):
        combine(dists, 0.5)


def _brute_force(p_s, p_e, max_len):
    best, best_score = None, -math.inf
    for s in range(len(p_s)):
        for e in range(s, min(len(p_s), s + max_len)):
            score = p_s[s] * p_e[e]
            if score > best_score:
                best, best_score = (s, e), score
    return best


@st.composite
def span_inputs(draw):
    m = draw(st.integers(min_value=1, max_value=12))
    # небольшой алфавит весов даёт много равенств
    weights = st.lists(st.integers(min_value=0, max_value=3), min_size=m, max_size=m).filter(lambda w: sum(w) > 0)
    s_w, e_w = draw(weights), draw(weights)
    p_s = np.array(s_w, dtype=np.float64) / sum(s_w)
    p_e = np.array(e_w, dtype=np.float64) / sum(e_w)
    return p_s, p_e, draw(st.integers(min_value=1, max_value=5))


@settings(max_examples=200, deadline=None)
@given(span_inputs())
def test_decode_matches_brute_force(inputs):
    p_s, p_e, max_len = inputs
    s, e, confidence = decode_span(p_s, p_e, constrained=True, max_len=max_len)
    assert (s, e) == _brute_force(p_s, p_e, max_len)
    assert s <= e < s + max_len
    assert confidence == pytest.approx(p_s[s] * p_e[e])


def test_decode_ties_prefer_smaller_start():
    p = np.full(4, 0.25)
    assert decode_span(p, p, max_len=3)[:2] == (0, 0)


def test_literal_argmax_can_cross():
    p_s = np.array([0.1, 0.1, 0.8])
    p_e = np.array([0.7, 0.2, 0.1])
    s, e, _ = decode_span(p_s, p_e, constrained=False)
    assert (s, e) == (2, 0)
    s, e, _ = decode_span(p_s, p_e, constrained=True, max_len=3)
    assert s <= e


def test_decode_validates_inputs():
    with pytest.raises(ShapeError):
        decode_span(np.array([]), np.array([]))
    with pytest.raises(ShapeError):
        decode_span(np.array([1.0]), np.array([0.5, 0.5]))
    with pytest.raises(ConfigError):
        decode_span(np.array([1.0]), np.array([1.0]), max_len=0)


def test_identical_heads_make_alpha_irrelevant():
    rng = np.random.default_rng(3)
    p_s, p_e = rng.dirichlet(np.ones(9)), rng.dirichlet(np.ones(9))
    dists = SpanDistributions(p_s, p_e, p_s.copy(), p_e.copy())
    spans = {(check_and_select(dists, a).s, check_and_select(dists, a).e) for a in ALPHA_GRID}
    assert len(spans) == 1


def test_extract_answer_uses_character_offsets():
    text = "The Denver  Broncos won."
    tokens = tokenize(text)
    assert extract_answer(text, tokens, 1, 2) == "Denver  Broncos"
    with pytest.raises(IndexError):
        extract_answer(text, tokens, 2, 1)
    with pytest.raises(IndexError):
        extract_answer(text, tokens, 0, len(tokens))


def test_decode_random_instances_against_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        m = int(rng.integers(1, 13))
        max_len = int(rng.integers(1, 6))
        p_s = rng.integers(0, 4, size=m).astype(np.float64) + (rng.random() < 0.5) * rng.random(m)
        p_e = rng.integers(0, 4, size=m).astype(np.float64)
        s, e, _ = decode_span(p_s, p_e, constrained=True, max_len=max_len)
        assert (s, e) == _brute_force(p_s, p_e, max_len)


@pytest.mark.parametrize("bias,expect_summary", [(-30.0, False), (30.0, True)])
def test_align_gate_limits(bias, expect_summary):
    rng = np.random.default_rng(5)
    D, m = 4, 3
    summary = Tensor(rng.standard_normal(D))
    hop_states = Tensor(rng.standard_normal((m, D)))
    W = Tensor(0.1 * rng.standard_normal((D, D)))
    aligned = align_inputs(summary, hop_states, W, Tensor(np.full(D, bias)))
    for i in range(m):
        target = summary.data if expect_summary else hop_states.data[i]
        np.testing.assert_allclose(aligned.data[i], target, atol=1e-10)


def test_single_token_passage_points_at_it():
    store = ParamStore(np.random.default_rng(1))
    gru = store.bigru("aggregate", 6, 3)
    p_s, p_e = point_first(Tensor(np.random.default_rng(2).standard_normal((1, 6))), gru,
                           store.weights("w_s", 6), store.weights("w_e", 6))
    np.testing.assert_allclose(p_s.data, [1.0], atol=1e-15)
    np.testing.assert_allclose(p_e.data, [1.0], atol=1e-15)
