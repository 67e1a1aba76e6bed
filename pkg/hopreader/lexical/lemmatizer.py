"""Правиловый лемматизатор: таблица исключений + снятие -s/-es/-ing/-ed с восстановлением удвоения."""

IRREGULAR = {
    # глаголы
    "am": "be", "is": "be", "are": "be", "was": "be", "were": "be", "been": "be", "being": "be",
    "has": "have", "had": "have", "having": "have",
    "does": "do", "did": "do", "done": "do", "doing": "do",
    "went": "go", "gone": "go", "goes": "go",
    "made": "make", "making": "make",
    "said": "say", "says": "say",
    "took": "take", "taken": "take", "taking": "take",
    "came": "come", "coming": "come",
    "saw": "see", "seen": "see",
    "knew": "know", "known": "know",
    "got": "get", "gotten": "get",
    "gave": "give", "given": "give", "giving": "give",
    "found": "find",
    "thought": "think",
    "told": "tell",
    "became": "become",
    "left": "leave",
    "felt": "feel",
    "brought": "bring",
    "began": "begin", "begun": "begin",
    "kept": "keep",
    "held": "hold",
    "wrote": "write", "written": "write", "writing": "write",
    "stood": "stand",
    "heard": "hear",
    "meant": "mean",
    "met": "meet",
    "ran": "run",
    "paid": "pay",
    "sat": "sit",
    "spoke": "speak", "spoken": "speak",
    "led": "lead",
    "grew": "grow", "grown": "grow",
    "lost": "lose",
    "fell": "fall", "fallen": "fall",
    "sent": "send",
    "built": "build",
    "understood": "understand",
    "drew": "draw", "drawn": "draw",
    "broke": "break", "broken": "break",
    "spent": "spend",
    "rose": "rise", "risen": "rise",
    "drove": "drive", "driven": "drive",
    "bought": "buy",
    "wore": "wear", "worn": "wear",
    "chose": "choose", "chosen": "choose",
    "won": "win",
    "fought": "fight",
    "taught": "teach",
    "sold": "sell",
    "flew": "fly", "flown": "fly",
    "ate": "eat", "eaten": "eat",
    "sang": "sing", "sung": "sing",
    "threw": "throw", "thrown": "throw",
    "died": "die", "dying": "die",
    "lay": "lie", "lain": "lie",
    "founded": "found",
    # существительные
    "men": "man", "women": "woman", "children": "child", "people": "person",
    "feet": "foot", "teeth": "tooth", "mice": "mouse", "geese": "goose",
    "data": "datum", "criteria": "criterion", "phenomena": "phenomenon",
    "lives": "life", "wives": "wife", "knives": "knife", "leaves": "leaf",
    # формы, которые правила испортили бы
    "this": "this", "his": "his", "its": "its", "us": "us",
    "news": "news", "series": "series", "species": "species",
    "better": "good", "best": "good", "worse": "bad", "worst": "bad",
}

_NO_UNDOUBLE = set("lsz")
_VOWELS = set("aeiou")


def _undouble(stem: str) -> str:
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS and stem[-1] not in _NO_UNDOUBLE:
        return stem[:-1]
    return stem


def lemmatize(word: str) -> str:
    w = word.lower()
    if w in IRREGULAR:
        return IRREGULAR[w]
    if not w.isalpha() or len(w) <= 3:
        return w
    if w.endswith("ies") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("sses"):
        return w[:-2]
    if w.endswith(("xes", "ches", "shes", "zes")):
        return w[:-2]
    if w.endswith("s") and not w.endswith(("ss", "us", "is")):
        return w[:-1]
    if w.endswith("ing") and len(w) > 5:
        return _undouble(w[:-3])
    if w.endswith("ied") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("ed") and len(w) > 4:
        return _undouble(w[:-2])
    return w
