"""
Встроенный игрушечный корпус в формате SQuAD: 50 коротких абзацев с вопросом и ответом.
Смещения ответов вычисляются по тексту при сборке.
"""
from pathlib import Path
from typing import Any, Dict, List, Tuple

import orjson

TRIPLES: List[Tuple[str, str, str]] = [
    ("The Denver Broncos defeated the Carolina Panthers to win the title in 2016.",
     "Who defeated the Carolina Panthers?", "Denver Broncos"),
    ("Marie Curie was born in Warsaw and later moved to Paris to study physics.",
     "Where was Marie Curie born?", "Warsaw"),
    ("The Eiffel Tower was completed in 1889 for the World Fair in Paris.",
     "When was the Eiffel Tower completed?", "1889"),
    ("Isaac Newton described the laws of motion in a book published in 1687.",
     "What did Isaac Newton describe?", "the laws of motion"),
    ("The Nile is the longest river in Africa and flows north into the sea.",
     "Which river is the longest in Africa?", "The Nile"),
    ("Ada Lovelace wrote the first program for the analytical engine of Charles Babbage.",
     "Whose analytical engine did Ada Lovelace program?", "Charles Babbage"),
    ("Mount Everest rises about 8848 metres above sea level on the border of Nepal.",
     "How high does Mount Everest rise?", "about 8848 metres"),
    ("Bees make honey from the nectar they collect from flowers.",
     "What do bees make honey from?", "the nectar"),
    ("The Amazon rainforest covers much of Brazil and produces a large share of oxygen.",
     "Which country does the Amazon rainforest cover?", "Brazil"),
    ("Alexander Graham Bell is credited with inventing the telephone in 1876.",
     "Who is credited with inventing the telephone?", "Alexander Graham Bell"),
    ("Water boils at 100 degrees Celsius at sea level.",
     "At what temperature does water boil?", "100 degrees Celsius"),
    ("The Great Wall was built to protect the northern border of China.",
     "Why was the Great Wall built?", "to protect the northern border of China"),
    ("Leonardo painted the Mona Lisa, which now hangs in the Louvre museum.",
     "Where does the Mona Lisa hang?", "the Louvre museum"),
    ("The first modern Olympic Games were held in Athens in 1896.",
     "Where were the first modern Olympic Games held?", "Athens"),
    ("Penguins live mostly in the Southern Hemisphere and cannot fly.",
     "Where do penguins mostly live?", "the Southern Hemisphere"),
    ("Albert Einstein received the Nobel Prize in Physics in 1921.",
     "When did Albert Einstein receive the Nobel Prize?", "1921"),
    ("The heart pumps blood through the body using four chambers.",
     "How many chambers does the heart use?", "four"),
    ("Shakespeare wrote the tragedy Hamlet around the year 1600.",
     "Which tragedy did Shakespeare write?", "Hamlet"),
    ("The Pacific is the largest ocean on Earth and contains the deepest trench.",
     "What is the largest ocean on Earth?", "The Pacific"),
    ("Nikola Tesla worked on alternating current systems in New York.",
     "What did Nikola Tesla work on?", "alternating current systems"),
    ("The moon orbits the Earth roughly once every 27 days.",
     "How often does the moon orbit the Earth?", "roughly once every 27 days"),
    ("Galileo improved the telescope and observed the moons of Jupiter.",
     "What did Galileo observe?", "the moons of Jupiter"),
    ("The Berlin Wall fell in 1989, reuniting the city after decades.",
     "When did the Berlin Wall fall?", "1989"),
    ("Plants use sunlight to turn carbon dioxide and water into sugar.",
     "What do plants use to make sugar?", "sunlight"),
    ("Mozart composed his first symphony at the age of eight.",
     "At what age did Mozart compose his first symphony?", "eight"),
    ("The Sahara is a hot desert that stretches across northern Africa.",
     "What kind of desert is the Sahara?", "a hot desert"),
    ("Neil Armstrong was the first person to walk on the moon in 1969.",
     "Who was the first person to walk on the moon?", "Neil Armstrong"),
    ("Copper is a metal that conducts electricity very well.",
     "What does copper conduct very well?", "electricity"),
    ("The Thames flows through London before reaching the North Sea.",
     "Which city does the Thames flow through?", "London"),
    ("Florence Nightingale trained nurses and improved hospital hygiene.",
     "Whom did Florence Nightingale train?", "nurses"),
    ("A spider has eight legs, while an insect has six legs.",
     "How many legs does a spider have?", "eight"),
    ("The printing press was invented by Johann Gutenberg in Germany.",
     "Who invented the printing press?", "Johann Gutenberg"),
    ("Rome was the capital of a vast empire that ruled the Mediterranean.",
     "What did the empire of Rome rule?", "the Mediterranean"),
    ("Diamonds are formed from carbon under great heat and pressure.",
     "What are diamonds formed from?", "carbon"),
    ("The Titanic sank in 1912 after striking an iceberg in the Atlantic.",
     "What did the Titanic strike?", "an iceberg"),
    ("Charles Darwin sailed on the Beagle and studied finches on remote islands.",
     "What ship did Charles Darwin sail on?", "the Beagle"),
    ("Tokyo is the capital of Japan and one of the largest cities in the world.",
     "Is Tokyo the capital of Japan or of China?", "Japan"),
    ("Beethoven kept composing music even after he lost his hearing.",
     "What did Beethoven lose?", "his hearing"),
    ("The Wright brothers flew the first powered airplane near Kitty Hawk.",
     "Where did the Wright brothers fly the first powered airplane?", "near Kitty Hawk"),
    ("Salmon swim upstream to lay their eggs in fresh water.",
     "Why do salmon swim upstream?", "to lay their eggs in fresh water"),
    ("Abraham Lincoln delivered the Gettysburg Address during the Civil War.",
     "Who delivered the Gettysburg Address?", "Abraham Lincoln"),
    ("Gold has the chemical symbol Au, taken from the Latin word aurum.",
     "What is the chemical symbol of gold?", "Au"),
    ("The Alps stretch across eight countries, including Austria and Switzerland.",
     "How many countries do the Alps stretch across?", "eight countries"),
    ("Vincent van Gogh painted The Starry Night while staying in France.",
     "Which painting did Vincent van Gogh paint in France?", "The Starry Night"),
    ("Owls hunt at night and can turn their heads very far.",
     "When do owls hunt?", "at night"),
    ("The Panama Canal connects the Atlantic Ocean with the Pacific Ocean.",
     "What does the Panama Canal connect with the Pacific Ocean?", "the Atlantic Ocean"),
    ("Rosa Parks refused to give up her seat on a bus in Montgomery.",
     "Where did Rosa Parks refuse to give up her seat?", "on a bus in Montgomery"),
    ("Volcanoes erupt when melted rock called magma rises to the surface.",
     "What is melted rock called?", "magma"),
    ("Amelia Earhart flew alone across the Atlantic in 1932.",
     "Name the year Amelia Earhart flew alone across the Atlantic.", "1932"),
    ("The library of the university holds more than two million books.",
     "How many books does the library hold?", "more than two million"),
]


def build_toy_corpus() -> Dict[str, Any]:
    paragraphs = []
    for i, (context, question, answer) in enumerate(TRIPLES):
        start = context.find(answer)
        if start < 0:
            raise ValueError(f"toy example {i}: answer {answer!r} is not in the passage")
        paragraphs.append({
            "context": context,
            "qas": [{"id": f"toy-{i:03d}", "question": question,
                     "answers": [{"text": answer, "answer_start": start}]}],
        })
    return {"version": "1.1", "data": [{"title": "toy", "paragraphs": paragraphs}]}


def write_toy_corpus(path: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(orjson.dumps(build_toy_corpus(), option=orjson.OPT_INDENT_2))
    return target
