import threading
from typing import Callable, Dict, Hashable, Optional, Tuple

from hopreader.model.embedding import PreparedDoc

PreparedPair = Tuple[PreparedDoc, PreparedDoc]


class FeatureCache:
    """
    Кэш подготовленных входов примеров (векторы слов, окна символов, признаки).
    Ключ: (id вопроса, текст вопроса); одна модель держит свой экземпляр.
    """

    def __init__(self):
        self._prepared: Dict[Hashable, PreparedPair] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: Hashable) -> Optional[PreparedPair]:
        with self._lock:
            found = self._prepared.get(key)
            if found is not None:
                self.hits += 1
            return found

    def get_or_prepare(self, key: Hashable, build: Callable[[], PreparedPair]) -> PreparedPair:
        cached = self.get(key)
        if cached is not None:
            return cached
        prepared = build()
        with self._lock:
            self.misses += 1
            # параллельный поток мог успеть раньше: остаётся первая запись
            return self._prepared.setdefault(key, prepared)

    def __len__(self) -> int:
        return len(self._prepared)
