import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

from hopreader.lexical.lemmatizer import lemmatize

# Порядок альтернатив важен: аббревиатуры с точками (U.S.), числа с буквенным хвостом (3rd, 1990s),
# слова, одиночная пунктуация
_TOKEN_RE = re.compile(
    r"(?:[A-Za-z]\.){2,}"
    r"|\d+(?:[.,:]\d+)*[A-Za-z]*"
    r"|\w+(?:[-'’]\w+)*"
    r"|[^\w\s]"
)


@dataclass
class Token:
    text: str
    char_start: int
    char_end: int
    lower: str
    lemma: str
    pos: Optional[int] = None
    ner: Optional[int] = None
    tf: Optional[float] = None
    em: Optional[Tuple[int, int, int]] = None
    surprisal: Optional[float] = None
    qtype: Optional[int] = None


def tokenize(text: str) -> List[Token]:
    """Детерминированная токенизация по пробелам и границам пунктуации с точными смещениями."""
    tokens = []
    for match in _TOKEN_RE.finditer(text):
        surface = match.group(0)
        lower = surface.lower()
        tokens.append(
            Token(
                text=surface,
                char_start=match.start(),
                char_end=match.end(),
                lower=lower,
                lemma=lemmatize(lower),
            )
        )
    return tokens


def detokenize(text: str, tokens: List[Token]) -> str:
    """Склеивает токены с исходными промежутками (обратная операция для tokenize)."""
    parts = []
    cursor = 0
    for tok in tokens:
        parts.append(text[cursor:tok.char_start])
        parts.append(tok.text)
        cursor = tok.char_end
    parts.append(text[cursor:])
    return "".join(parts)
