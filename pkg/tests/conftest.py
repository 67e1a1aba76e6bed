import copy
from typing import Tuple

import pytest

from hopreader.core.config import ModelDims, TrainConfig
from hopreader.data.squad import Dataset, Example, annotate_dataset, parse_squad
from hopreader.data.toy import build_toy_corpus
from hopreader.lexical.ngram import NGramLM
from hopreader.lexical.pipeline import train_passage_lm
from hopreader.model.embedding import Vocabulary
from hopreader.model.network import HopReader
from utils.aiologger import LogLevel, log


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def quiet_log(tmp_path):
    log.reset()
    log.configure(path_template=str(tmp_path / "logs" / "{date}.log"), level=LogLevel.DEBUG, to_console=False)
    yield
    log.reset()


@pytest.fixture(scope="session")
def toy_corpus():
    return build_toy_corpus()


@pytest.fixture
def toy_dataset(toy_corpus) -> Dataset:
    return parse_squad(copy.deepcopy(toy_corpus), source="toy.json")


@pytest.fixture
def tiny_config() -> TrainConfig:
    return TrainConfig(
        batch_size=4,
        lr_scale=1.0,
        dropout=0.0,
        l2=0.0,
        epochs=1,
        ema_decay=0.9,
        ensemble_size=1,
        max_len=5,
        dims=ModelDims(embed=6, char_dim=4, char_width=2, hidden=5),
    )


def build_model(config: TrainConfig, dataset: Dataset) -> Tuple[HopReader, NGramLM]:
    """Разметка данных и модель со словарём по этим данным."""
    lm = train_passage_lm(dataset.contexts(), order=config.lm_order, k=config.lm_k)
    annotate_dataset(dataset, lm)
    vocab = Vocabulary.build(dataset.vocabulary, config.dims.embed, config.seed)
    return HopReader(config, vocab), lm


@pytest.fixture
def small_dataset(toy_dataset) -> Dataset:
    return toy_dataset.subset([ex.id for ex in toy_dataset.all_examples[:5]], "train")


@pytest.fixture
def tiny_model(tiny_config, small_dataset) -> Tuple[HopReader, Dataset]:
    model, _ = build_model(tiny_config, small_dataset)
    return model, small_dataset


def first_example(dataset: Dataset) -> Example:
    return dataset.examples[0]
