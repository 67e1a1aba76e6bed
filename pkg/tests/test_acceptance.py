"""Долгие прогоны на игрушечном корпусе; запускаются с --runslow."""
import copy

import numpy as np
import pytest

from hopreader.core.config import build_train_config
from hopreader.core.profiles import load_profile
from hopreader.core.tensor import Tensor, no_grad
from hopreader.data.squad import parse_squad
from hopreader.model.embedding import lexical_gate
from hopreader.model.network import HopReader
from hopreader.training.trainer import prepare_training, score_dataset, train
from tests.conftest import build_model

pytestmark = pytest.mark.slow


def _desk(**overrides):
    return build_train_config(load_profile("desk")).with_overrides(**overrides)


async def test_desk_model_overfits_toy_corpus(toy_corpus):
    dataset = parse_squad(copy.deepcopy(toy_corpus), source="toy.json")
    ckpt = await train(_desk(dropout=0.0), dataset)
    report = score_dataset(ckpt.build_model(), dataset)
    assert report.em >= 90.0


@pytest.mark.parametrize("overrides", [{"hops": 1}, {"ablation": {"no_checking": True}}])
def test_reduced_models_still_train(toy_corpus, overrides):
    full = parse_squad(copy.deepcopy(toy_corpus), source="toy.json")
    data = full.subset([ex.id for ex in full.all_examples[:5]])
    config = _desk(dropout=0.0, l2=0.0, batch_size=5, **overrides)
    trainer = prepare_training(config, data)
    losses = [trainer.run_epoch(data.examples).loss for _ in range(10)]
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_distributions_over_many_instantiations(tiny_config, small_dataset):
    model, _ = build_model(tiny_config, small_dataset)
    vocab = model.vocab
    for seed in range(1000):
        model = HopReader(tiny_config.with_overrides(seed=seed), vocab)
        ex = small_dataset.examples[seed % len(small_dataset.examples)]
        with no_grad():
            result = model.forward(ex)
            passage, question = model.prepare(ex)
            for side, doc in (("passage", passage), ("question", question)):
                W, b = model.embedder.gates[side]
                gate = lexical_gate(Tensor(doc.features), W, b).data
                assert np.all((gate > 0.0) & (gate < 1.0))
        for p_s, p_e in result.heads:
            for p in (p_s.data, p_e.data):
                assert np.all(p >= 0.0)
                assert abs(p.sum() - 1.0) <= 1e-9
        for hop in result.hops:
            assert np.all(np.abs(hop.attention.data.sum(axis=1) - 1.0) <= 1e-9)
