"""
Эвристический POS/NER-теггер (суффиксы, регистр, лексиконы) и загрузка
внешней разметки (sidecar JSON-lines), которая имеет приоритет.
"""
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import orjson

from hopreader.core.errors import DataError
from hopreader.lexical.tokenizer import Token

# 12 универсальных крупных тегов
POS_TAGS = ("NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM", "CONJ", "PRT", "PUNCT", "X")
NER_TAGS = ("PER", "LOC", "ORG", "MISC", "O")
POS_INDEX = {tag: i for i, tag in enumerate(POS_TAGS)}
NER_INDEX = {tag: i for i, tag in enumerate(NER_TAGS)}
# синонимы, встречающиеся во внешних разметках
_POS_ALIASES = {".": "PUNCT", "PROPN": "NOUN", "AUX": "VERB", "CCONJ": "CONJ", "SCONJ": "CONJ", "PART": "PRT",
                "INTJ": "X", "SYM": "X"}
_NER_ALIASES = {"PERSON": "PER", "GPE": "LOC", "LOCATION": "LOC", "ORGANIZATION": "ORG", "MISCELLANEOUS": "MISC",
                "": "O", "NONE": "O"}

_DETERMINERS = {"a", "an", "the", "this", "that", "these", "those", "every", "each", "some", "any", "no",
                "another", "such", "both", "either", "neither", "all"}
_PRONOUNS = {"i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them", "my", "your",
             "his", "its", "our", "their", "mine", "yours", "ours", "theirs", "who", "whom", "whose", "what",
             "which", "myself", "himself", "herself", "itself", "themselves", "someone", "something",
             "anyone", "anything", "everyone", "everything", "nobody", "nothing"}
_ADPOSITIONS = {"of", "in", "on", "at", "by", "for", "with", "from", "into", "onto", "over", "under", "about",
                "after", "before", "between", "through", "during", "without", "within", "against", "among",
                "across", "behind", "beyond", "near", "since", "until", "upon", "toward", "towards", "like",
                "than", "via", "per", "despite", "along", "around"}
_CONJUNCTIONS = {"and", "or", "but", "nor", "yet", "so", "because", "although", "though", "while", "whereas",
                 "if", "unless", "whether"}
_PARTICLES = {"to", "not", "n't", "up", "off", "out", "'s"}
_ADVERBS = {"when", "where", "why", "how", "very", "also", "often", "never", "always", "then", "there",
            "here", "now", "soon", "again", "already", "still", "just", "only", "even", "too", "almost"}
_VERBS = {"be", "am", "is", "are", "was", "were", "been", "being", "have", "has", "had", "do", "does", "did",
          "can", "could", "will", "would", "shall", "should", "may", "might", "must", "won", "became",
          "become", "said", "made", "went", "took", "gave", "came", "wrote", "built", "founded", "invented",
          "discovered", "lost", "lead", "led", "play", "plays", "played", "end", "ended"}
_NUMBER_WORDS = {"one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
                 "twelve", "hundred", "thousand", "million", "billion", "first", "second", "third"}

LOCATIONS = {
    "paris", "london", "berlin", "rome", "madrid", "tokyo", "beijing", "moscow", "cairo", "sydney",
    "boston", "chicago", "denver", "seattle", "texas", "california", "florida", "york", "france",
    "germany", "italy", "spain", "china", "japan", "india", "russia", "egypt", "canada", "mexico",
    "brazil", "england", "scotland", "ireland", "europe", "asia", "africa", "america", "australia",
    "nile", "amazon", "thames", "alps", "everest", "pacific", "atlantic", "vienna", "athens", "lisbon",
    "warsaw", "prague", "oslo", "stockholm", "hawaii", "alaska", "greece", "norway", "poland",
    "austria", "portugal", "sweden", "kenya", "peru", "chile", "argentina", "nairobi", "toronto",
}
PERSON_NAMES = {
    "john", "mary", "james", "robert", "michael", "william", "david", "richard", "thomas", "charles",
    "george", "elizabeth", "marie", "albert", "isaac", "leonardo", "wolfgang", "ludwig", "napoleon",
    "alexander", "ada", "alan", "nikola", "galileo", "jane", "emily", "peter", "paul",
    "anna", "victoria", "henry", "edward", "louis", "frederick", "abraham", "martin", "rosa", "neil",
    "amelia", "florence", "vincent", "pablo", "johann", "darwin", "newton", "einstein", "curie",
    "tesla", "shakespeare", "mozart", "beethoven", "lincoln", "picasso", "gandhi",
}
ORG_CUES = {
    "university", "college", "institute", "company", "corporation", "corp", "inc", "ltd", "council",
    "association", "society", "bank", "agency", "committee", "broncos", "panthers", "league", "party",
    "museum", "foundation", "nasa", "unesco", "fifa", "nato", "google", "microsoft", "apple", "ibm",
}

_ADJ_SUFFIXES = ("ous", "ful", "ive", "able", "ible", "less", "ical", "ish", "ic", "al", "ary", "est")
_NOUN_SUFFIXES = ("tion", "sion", "ment", "ness", "ity", "ship", "ance", "ence", "ism", "ist", "er", "or")


def _guess_pos(tok: Token) -> str:
    text, low = tok.text, tok.lower
    if not any(ch.isalnum() for ch in text):
        return "PUNCT"
    if any(ch.isdigit() for ch in text) and not any(ch.isalpha() for ch in text):
        return "NUM"
    if low in _NUMBER_WORDS:
        return "NUM"
    if low in _DETERMINERS:
        return "DET"
    if low in _PRONOUNS:
        return "PRON"
    if low in _ADPOSITIONS:
        return "ADP"
    if low in _CONJUNCTIONS:
        return "CONJ"
    if low in _PARTICLES:
        return "PRT"
    if low in _ADVERBS:
        return "ADV"
    if low in _VERBS:
        return "VERB"
    if text[0].isupper():
        return "NOUN"
    if low.endswith("ly") and len(low) > 4:
        return "ADV"
    if low.endswith(("ing", "ed")) and len(low) > 4:
        return "VERB"
    if low.endswith(_NOUN_SUFFIXES) and len(low) > 4:
        return "NOUN"
    if low.endswith(_ADJ_SUFFIXES) and len(low) > 4:
        return "ADJ"
    if not any(ch.isalpha() for ch in text):
        return "X"
    return "NOUN"


def _is_capitalized(tok: Token) -> bool:
    return tok.text[:1].isupper() and any(ch.isalpha() for ch in tok.text)


def _sentence_initial(tokens: Sequence[Token], i: int) -> bool:
    return i == 0 or tokens[i - 1].text in {".", "!", "?", '"', "'", ":"}


def _guess_ner(tokens: Sequence[Token]) -> List[str]:
    tags = ["O"] * len(tokens)
    i = 0
    while i < len(tokens):
        if not _is_capitalized(tokens[i]):
            i += 1
            continue
        # группа подряд идущих слов с заглавной буквы: кандидат в сущность
        j = i
        while j + 1 < len(tokens) and _is_capitalized(tokens[j + 1]):
            j += 1
        span = [t.lower for t in tokens[i:j + 1]]
        if any(w in ORG_CUES for w in span):
            label = "ORG"
        elif any(w in LOCATIONS for w in span):
            label = "LOC"
        elif any(w in PERSON_NAMES for w in span):
            label = "PER"
        elif j == i and _sentence_initial(tokens, i):
            label = "O"
        elif span[0] in _DETERMINERS or span[0] in _PRONOUNS:
            label = "O"
        else:
            label = "MISC"
        for k in range(i, j + 1):
            tags[k] = label
        i = j + 1
    return tags


def _resolve(tag: str, index: Dict[str, int], aliases: Dict[str, str], kind: str) -> int:
    key = tag.upper()
    key = aliases.get(key, key)
    if key.startswith(("B-", "I-")):
        key = aliases.get(key[2:], key[2:])
    if key not in index:
        raise DataError(f"unknown {kind} tag '{tag}'")
    return index[key]


def annotate_pos_ner(tokens: List[Token], annotation: Optional[Dict[str, Any]] = None) -> List[Token]:
    """
    Проставляет pos/ner (и lemma из sidecar, если есть). Теги из внешней
    разметки побеждают встроенные эвристики.
    """
    if annotation is not None:
        for key in ("tokens", "pos", "ner", "lemma"):
            if key in annotation and len(annotation[key]) != len(tokens):
                raise DataError(
                    f"sidecar '{key}' has {len(annotation[key])} entries but the document has {len(tokens)} tokens"
                )
    pos_guess = [_guess_pos(t) for t in tokens]
    ner_guess = _guess_ner(tokens)
    for i, tok in enumerate(tokens):
        tok.pos = POS_INDEX[pos_guess[i]]
        tok.ner = NER_INDEX[ner_guess[i]]
        if annotation is None:
            continue
        if "pos" in annotation:
            tok.pos = _resolve(annotation["pos"][i], POS_INDEX, _POS_ALIASES, "POS")
        if "ner" in annotation:
            tok.ner = _resolve(annotation["ner"][i], NER_INDEX, _NER_ALIASES, "NER")
        if "lemma" in annotation:
            tok.lemma = str(annotation["lemma"][i]).lower()
    return tokens


def load_sidecar(path: str) -> List[Dict[str, Any]]:
    """Читает sidecar JSON-lines: один объект {"tokens","pos","ner","lemma"} на документ."""
    records = []
    for lineno, line in enumerate(Path(path).read_bytes().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = orjson.loads(line)
        except orjson.JSONDecodeError as e:
            raise DataError(f"invalid JSON: {e}", path=f"{path}:{lineno}") from None
        if not isinstance(record, dict):
            raise DataError("expected a JSON object", path=f"{path}:{lineno}")
        records.append(record)
    return records
