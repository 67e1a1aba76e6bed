"""N-граммная языковая модель с add-k сглаживанием для признака surprisal."""
import math
from collections import Counter, defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from hopreader.core.errors import DataError

UNK = "<unk>"
S_MAX = 20.0  # потолок surprisal в натах; в векторе признаков делится на него

Context = Tuple[str, ...]


class NGramLM:
    def __init__(self, order: int = 2, k: float = 0.1):
        if order < 1:
            raise ValueError(f"n-gram order must be >= 1, got {order}")
        if k < 0:
            raise ValueError(f"smoothing constant must be >= 0, got {k}")
        self.order = order
        self.k = k
        # counts[h][w]: сколько раз слово w шло после контекста h (len(h) < order)
        self.counts: Dict[Context, Counter] = defaultdict(Counter)
        self.totals: Dict[Context, int] = {}
        self.vocab: set = set()
        self._trained = False

    @property
    def vocab_size(self) -> int:
        """Размер словаря вместе с неизвестным токеном."""
        return len(self.vocab) + 1

    @classmethod
    def train(cls, documents: Iterable[Sequence[str]], order: int = 2, k: float = 0.1) -> "NGramLM":
        lm = cls(order, k)
        seen = False
        for doc in documents:
            words = [w.lower() for w in doc]
            for i, w in enumerate(words):
                seen = True
                lm.vocab.add(w)
                for n in range(order):
                    if i - n < 0:
                        break
                    lm.counts[tuple(words[i - n:i])][w] += 1
        if not seen:
            raise ValueError("cannot train a language model on an empty corpus")
        lm._finalize()
        return lm

    def _finalize(self) -> None:
        self.totals = {h: sum(c.values()) for h, c in self.counts.items()}
        self._trained = True

    def _ensure_trained(self) -> None:
        if not self._trained:
            raise RuntimeError("language model is not trained")

    def prob(self, word: str, history: Sequence[str] = ()) -> float:
        """
        P(w | последние order-1 слов истории) с add-k сглаживанием.
        Если у контекста нет ни одного наблюдения и k=0, используется более короткий контекст.
        """
        self._ensure_trained()
        w = word.lower()
        w = w if w in self.vocab else UNK
        hist = [h.lower() for h in history][-(self.order - 1):] if self.order > 1 else []
        context: Context = tuple(hist)
        while True:
            total = self.totals.get(context, 0)
            denom = total + self.k * self.vocab_size
            if denom > 0:
                count = self.counts[context].get(w, 0) if w != UNK and context in self.counts else 0
                return (count + self.k) / denom
            if not context:
                return 0.0
            context = context[1:]

    def surprisal(self, tokens: Sequence[str]) -> List[float]:
        """−ln P(w_t | w_1..w_{t−1}) по документу, с обрезкой в [0, S_MAX]."""
        self._ensure_trained()
        values = []
        for i, tok in enumerate(tokens):
            p = self.prob(tok, tokens[:i])
            s = -math.log(p) if p > 0 else S_MAX
            values.append(min(max(s, 0.0), S_MAX))
        return values

    # --- персистентность: отсортированный текстовый файл "ngram<TAB>count" ---

    def to_text(self) -> str:
        self._ensure_trained()
        lines = [f"#order\t{self.order}", f"#k\t{self.k!r}"]
        entries = []
        for context, counter in self.counts.items():
            for w, c in counter.items():
                entries.append((" ".join(context + (w,)), c))
        entries.sort()
        lines.extend(f"{ngram}\t{count}" for ngram, count in entries)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "NGramLM":
        order: Optional[int] = None
        k: Optional[float] = None
        rows = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            key, sep, value = line.rpartition("\t")
            if not sep:
                raise DataError(f"malformed count line: {line!r}", path=f"lm:{lineno}")
            if key == "#order":
                order = int(value)
            elif key == "#k":
                k = float(value)
            else:
                rows.append((key.split(" "), int(value)))
        if order is None or k is None:
            raise DataError("count file lacks #order/#k header")
        lm = cls(order, k)
        for words, count in rows:
            *context, w = words
            lm.counts[tuple(context)][w] += count
            lm.vocab.add(w)
        lm._finalize()
        return lm

    def save(self, path: str) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: str) -> "NGramLM":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def train_lm(corpus: Iterable[Sequence[str]], order: int = 2, k: float = 0.1) -> NGramLM:
    return NGramLM.train(corpus, order=order, k=k)


def surprisal(tokens: Sequence[str], lm: NGramLM) -> List[float]:
    return lm.surprisal(tokens)
