from typing import Sequence, Tuple

import numpy as np

from hopreader.core.errors import ConfigError
from hopreader.data.squad import Dataset

DEFAULT_RATIOS = (0.8, 0.1, 0.1)


def split_sizes(total: int, ratios: Sequence[float]) -> Tuple[int, ...]:
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must be three non-negative numbers summing to 1, got {list(ratios)}")
    train = int(round(total * ratios[0]))
    dev = int(round(total * ratios[1]))
    dev = min(dev, total - train)
    return train, dev, total - train - dev


def split(dataset: Dataset, ratios: Sequence[float] = DEFAULT_RATIOS, seed: int = 0) -> Tuple[Dataset, Dataset, Dataset]:
    """Перемешивание с seed и нарезка подряд идущими кусками: разбиение точное и без пересечений."""
    ids = [ex.id for ex in dataset.all_examples]
    n_train, n_dev, _ = split_sizes(len(ids), ratios)
    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    return (
        dataset.subset(shuffled[:n_train], "train"),
        dataset.subset(shuffled[n_train:n_train + n_dev], "dev"),
        dataset.subset(shuffled[n_train + n_dev:], "test"),
    )
