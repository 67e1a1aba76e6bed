"""
Входной слой: словные векторы (замороженные предобученные + обучаемые OOV-строки),
символьный CNN и лексический гейт, смешивающий их по признакам токена.
"""
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from hopreader.core.errors import DataError, ShapeError
from hopreader.core.tensor import Tensor, concat, sigmoid, take_rows, tanh, tmax
from hopreader.lexical.features import PASSAGE_DIM, QUESTION_DIM
from hopreader.model.params import ParamStore

PAD_CHAR = 0
UNK_CHAR = 1
WINDOW_MASK = -1e9


def seeded_vector(word: str, dim: int, seed: int) -> np.ndarray:
    """Детерминированный вектор слова: зависит только от слова, размерности и seed."""
    rng = np.random.default_rng([seed, zlib.crc32(word.encode("utf-8"))])
    return rng.uniform(-0.5, 0.5, size=dim)


def load_vectors(path: str, words: Iterable[str], dim: int) -> Dict[str, np.ndarray]:
    """
    Читает текстовый файл векторов ("слово f1 f2 ..."), оставляя только строки
    для слов корпуса (точное совпадение или нижний регистр).
    """
    wanted = set()
    for w in words:
        wanted.add(w)
        wanted.add(w.lower())
    vectors: Dict[str, np.ndarray] = {}
    with Path(path).open("r", encoding="utf-8", errors="replace") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.rstrip().split(" ")
            if len(parts) < 2:
                continue
            word = parts[0]
            if word not in wanted or word in vectors:
                continue
            if len(parts) - 1 != dim:
                raise DataError(f"vector for '{word}' has {len(parts) - 1} values, expected {dim}",
                                path=f"{path}:{lineno}")
            try:
                vectors[word] = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError:
                raise DataError(f"non-numeric vector for '{word}'", path=f"{path}:{lineno}") from None
    return vectors


@dataclass
class Vocabulary:
    dim: int
    seed: int
    pretrained_words: List[str] = field(default_factory=list)
    pretrained: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    oov_words: List[str] = field(default_factory=list)
    chars: List[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.pretrained.size == 0:
            self.pretrained = np.zeros((len(self.pretrained_words), self.dim))
        self._pre_index = {w: i for i, w in enumerate(self.pretrained_words)}
        self._oov_index = {w: i for i, w in enumerate(self.oov_words)}
        self._char_index = {c: i + 2 for i, c in enumerate(self.chars)}
        self._unseen: Dict[str, np.ndarray] = {}

    @classmethod
    def build(
        cls,
        words: Iterable[str],
        dim: int,
        seed: int,
        vectors: Optional[Dict[str, np.ndarray]] = None,
    ) -> "Vocabulary":
        """
        Без файла векторов (настольный режим) каждое слово корпуса получает
        случайный замороженный «предобученный» вектор.
        """
        corpus = sorted(set(words))
        chars = sorted({c for w in corpus for c in w})
        pre_words: List[str] = []
        oov: List[str] = []
        if vectors is None:
            pre_words = sorted({w.lower() for w in corpus})
            matrix = np.stack([seeded_vector(w, dim, seed) for w in pre_words]) if pre_words else np.zeros((0, dim))
        else:
            seen = set()
            for w in corpus:
                key = w if w in vectors else (w.lower() if w.lower() in vectors else None)
                if key is not None:
                    if key not in seen:
                        seen.add(key)
                        pre_words.append(key)
                elif w.lower() not in oov:
                    oov.append(w.lower())
            matrix = np.stack([vectors[w] for w in pre_words]) if pre_words else np.zeros((0, dim))
        return cls(dim=dim, seed=seed, pretrained_words=pre_words, pretrained=matrix, oov_words=oov, chars=chars)

    def resolve(self, word: str) -> Tuple[str, int]:
        """('pre', i) | ('oov', j) | ('unseen', -1)"""
        if word in self._pre_index:
            return "pre", self._pre_index[word]
        low = word.lower()
        if low in self._pre_index:
            return "pre", self._pre_index[low]
        if low in self._oov_index:
            return "oov", self._oov_index[low]
        return "unseen", -1

    def unseen_vector(self, word: str) -> np.ndarray:
        low = word.lower()
        if low not in self._unseen:
            self._unseen[low] = seeded_vector(low, self.dim, self.seed)
        return self._unseen[low]

    def char_ids(self, word: str) -> List[int]:
        return [self._char_index.get(c, UNK_CHAR) for c in word]

    def initial_oov_rows(self) -> np.ndarray:
        if not self.oov_words:
            return np.zeros((0, self.dim))
        return np.stack([seeded_vector(w, self.dim, self.seed) for w in self.oov_words])


@dataclass
class PreparedDoc:
    """Константные входы одного документа для слоя эмбеддингов."""
    words: np.ndarray           # (m, d) предобученные / unseen строки, нули на месте OOV
    oov_select: np.ndarray      # (m, k) one-hot выбор OOV-строк
    oov_rows: np.ndarray        # (k,) индексы строк в обучаемой таблице
    windows: np.ndarray         # (m * W, width) индексы символов в окнах свёртки
    window_mask: np.ndarray     # (m, W, 1) 0 для допустимых окон, WINDOW_MASK для хвоста
    nonempty: np.ndarray        # (m, 1) 0 для пустых строк
    features: np.ndarray        # (m, f) лексические признаки

    @property
    def length(self) -> int:
        return self.words.shape[0]


def prepare_doc(texts: Sequence[str], features: np.ndarray, vocab: Vocabulary, width: int) -> PreparedDoc:
    m = len(texts)
    if m == 0:
        raise ShapeError("cannot embed an empty document")
    words = np.zeros((m, vocab.dim))
    oov_pos: List[Tuple[int, int]] = []
    for i, text in enumerate(texts):
        kind, idx = vocab.resolve(text)
        if kind == "pre":
            words[i] = vocab.pretrained[idx]
        elif kind == "oov":
            oov_pos.append((i, idx))
        else:
            words[i] = vocab.unseen_vector(text)
    select = np.zeros((m, len(oov_pos)))
    for j, (i, _) in enumerate(oov_pos):
        select[i, j] = 1.0
    rows = np.array([idx for _, idx in oov_pos], dtype=np.int64)

    ids = [vocab.char_ids(t) for t in texts]
    padded_len = max(max(len(c), width) for c in ids)
    n_windows = padded_len - width + 1
    grid = np.full((m, padded_len), PAD_CHAR, dtype=np.int64)
    mask = np.zeros((m, n_windows, 1))
    for i, c in enumerate(ids):
        grid[i, :len(c)] = c
        mask[i, max(len(c), width) - width + 1:, 0] = WINDOW_MASK
    windows = np.stack([grid[:, j:j + width] for j in range(n_windows)], axis=1)  # (m, W, width)
    nonempty = np.array([[1.0 if c else 0.0] for c in ids])
    return PreparedDoc(
        words=words,
        oov_select=select,
        oov_rows=rows,
        windows=windows.reshape(m * n_windows, width),
        window_mask=mask,
        nonempty=nonempty,
        features=np.asarray(features, dtype=np.float64),
    )


def lexical_gate(features: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """g = σ(W·E_v + b) для вектора признаков или построчно для матрицы (m, f)."""
    if features.shape[-1] != W.shape[1]:
        raise ShapeError(f"lexical_gate: features {features.shape} do not match W {W.shape}")
    return sigmoid(features @ W.T + b)


def fuse(word: Tensor, char: Tensor, gate: Tensor) -> Tensor:
    if not (word.shape == char.shape == gate.shape):
        raise ShapeError(f"fuse: shapes differ word={word.shape} char={char.shape} gate={gate.shape}")
    return gate * word + (1.0 - gate) * char


class Embedder:
    def __init__(self, store: ParamStore, vocab: Vocabulary, char_dim: int, width: int, input_concat: bool = False):
        d = vocab.dim
        self.vocab = vocab
        self.char_dim = char_dim
        self.width = width
        self.input_concat = input_concat
        self.oov = store.table("embed.oov", vocab.initial_oov_rows())
        self.chars = store.matrix("embed.chars", len(vocab.chars) + 1, char_dim)  # строка 0: неизвестный символ
        self.filters = store.matrix("embed.filters", width * char_dim, d)
        self.filter_bias = store.vector("embed.filter_bias", d)
        self.gates: Dict[str, Tuple[Tensor, Tensor]] = {}
        if not input_concat:
            for side, f in (("passage", PASSAGE_DIM), ("question", QUESTION_DIM)):
                self.gates[side] = (store.matrix(f"gate.{side}.W", d, f), store.vector(f"gate.{side}.b", d))

    def output_dim(self, side: str) -> int:
        f = PASSAGE_DIM if side == "passage" else QUESTION_DIM
        return (2 * self.vocab.dim if self.input_concat else self.vocab.dim) + f

    def prepare(self, texts: Sequence[str], features: np.ndarray) -> PreparedDoc:
        return prepare_doc(texts, features, self.vocab, self.width)

    def word_vectors(self, doc: PreparedDoc) -> Tensor:
        const = Tensor(doc.words)
        if doc.oov_rows.size == 0:
            return const
        return const + Tensor(doc.oov_select) @ take_rows(self.oov, doc.oov_rows)

    def char_vectors(self, doc: PreparedDoc) -> Tensor:
        m = doc.length
        n_windows = doc.window_mask.shape[1]
        table = concat([Tensor(np.zeros((1, self.char_dim))), self.chars], axis=0)
        emb = take_rows(table, doc.windows.reshape(-1)).reshape(m * n_windows, self.width * self.char_dim)
        act = tanh(emb @ self.filters + self.filter_bias).reshape(m, n_windows, self.vocab.dim)
        pooled = tmax(act + Tensor(doc.window_mask), axis=1)
        return pooled * Tensor(doc.nonempty)

    def embed(self, doc: PreparedDoc, side: str) -> Tensor:
        """E = [h, E_v], h = g∘E_w + (1−g)∘E_c; в режиме input_concat E = [E_w, E_c, E_v]."""
        words = self.word_vectors(doc)
        chars = self.char_vectors(doc)
        feats = Tensor(doc.features)
        if self.input_concat:
            return concat([words, chars, feats], axis=1)
        W, b = self.gates[side]
        gate = lexical_gate(feats, W, b)
        return concat([fuse(words, chars, gate), feats], axis=1)

    # --- поштучный доступ (тесты, диагностика) ---

    def lookup_word(self, text: str) -> Tensor:
        doc = self.prepare([text], np.zeros((1, 0)))
        return self.word_vectors(doc)[0]

    def char_encode(self, text: str) -> Tensor:
        doc = self.prepare([text], np.zeros((1, 0)))
        return self.char_vectors(doc)[0]
