"""
Synthetic - Deterministic goal-oriented travel-booking corpus and a matching word-vector file

Every agent turn has several valid paraphrases, and interchangeable words (synonyms,
cities, months, numbers) get nearby vectors, so a semantic reward can credit a
response that differs from the reference in wording only.
"""

import json
import logging
import re
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from dialogue.corpus import tokenize
from dialogue.embeddings import EmbeddingTable

logger = logging.getLogger(__name__)

SYNONYMS: Dict[str, List[str]] = {
    "ack": ["sure", "certainly", "okay", "great", "alright"],
    "travel": ["travel", "leave", "depart", "fly", "go"],
    "people": ["people", "travellers", "guests", "passengers"],
    "find": ["found", "have", "located"],
    "booked": ["booked", "reserved", "confirmed", "set"],
    "enjoy": ["enjoy", "love", "explore"],
    "nice": ["nice", "lovely", "pleasant", "wonderful"],
}

SLOTS: Dict[str, List[str]] = {
    "city": ["paris", "rome", "berlin", "madrid", "lisbon", "vienna", "prague", "dublin", "oslo",
             "athens", "tokyo", "seoul", "cairo", "lima", "quito", "boston", "denver", "toronto",
             "sydney", "nairobi"],
    "month": ["january", "february", "march", "april", "may", "june", "july", "august",
              "september", "october", "november", "december"],
    "day": [str(d) for d in range(1, 29)],
    "count": ["two", "three", "four", "five", "six"],
    "price": [str(p) for p in range(80, 300, 10)],
    "hotel": ["the royal palm", "the blue lagoon", "the grand plaza", "the old mill", "the river inn",
              "the golden gate", "the silver star", "the park lodge", "the harbor view",
              "the city loft", "the garden court", "the maple house"],
}

USER_TURNS = [
    ["hi , i want to go to {city}", "hello , i would like to book a trip to {city} .",
     "can you help me plan a trip to {city} ?", "i need a vacation in {city}"],
    ["i want to leave on {month} {day}", "{month} {day} please", "around {month} {day} would be good ."],
    ["there will be {count} of us", "{count} adults", "we are {count} people"],
    ["that works , book it", "sounds good , please book it .", "yes please"],
]

AGENT_TURNS = [
    ["{ack} , when would you like to {travel} to {city} ?", "{ack} ! what date do you want to {travel} ?",
     "{city} sounds {nice} . when do you plan to {travel} ?"],
    ["how many {people} will be going ?", "{ack} , and how many {people} ?",
     "for how many {people} should i book ?"],
    ["i {find} {hotel} in {city} for {price} dollars a night .",
     "{hotel} is available for {price} dollars per night .",
     "there is {hotel} at {price} dollars a night , would that work ?"],
    ["your trip is {booked} . {enjoy} {city} !", "all {booked} for {count} {people} . have a {nice} trip !",
     "done , {hotel} is {booked} . goodbye !"],
]

_PLACEHOLDER = re.compile(r"\{(\w+)\}")


def _fill(template: str, slots: Dict[str, str], rng: np.random.Generator) -> str:
    def replace(match: "re.Match") -> str:
        name = match.group(1)
        if name in slots:
            return slots[name]
        choices = SYNONYMS[name]
        return choices[int(rng.integers(len(choices)))]
    return _PLACEHOLDER.sub(replace, template)


def _pick(choices: Sequence[str], rng: np.random.Generator) -> str:
    return choices[int(rng.integers(len(choices)))]


def generate_dialogues(count: int = 500, seed: int = 0) -> List[Dict]:
    """Dialogues in corpus-file form; four user/agent exchanges each."""
    rng = np.random.Generator(np.random.PCG64(seed))
    dialogues = []
    for number in range(count):
        slots = {name: _pick(values, rng) for name, values in SLOTS.items()}
        turns = []
        for user_templates, agent_templates in zip(USER_TURNS, AGENT_TURNS):
            turns.append({"speaker": "user", "text": _fill(_pick(user_templates, rng), slots, rng)})
            turns.append({"speaker": "agent", "text": _fill(_pick(agent_templates, rng), slots, rng)})
        dialogues.append({"dialogue_id": f"synth-{number:05d}", "turns": turns})
    return dialogues


def synthetic_tokens() -> List[str]:
    """Every token the generator can produce, sorted."""
    tokens = set()
    for template in [t for group in USER_TURNS + AGENT_TURNS for t in group]:
        tokens.update(tokenize(_PLACEHOLDER.sub(" ", template)))
    for values in list(SYNONYMS.values()) + list(SLOTS.values()):
        for value in values:
            tokens.update(tokenize(value))
    return sorted(tokens)


def synthetic_embeddings(dim: int = 50, seed: int = 0) -> EmbeddingTable:
    """
    Vectors for every synthetic token.

    Members of one synonym group sit within 0.15 of a shared center; slot values
    of one kind sit within 0.5 of theirs; every other token is an independent draw.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    groups: Dict[str, Tuple[str, float]] = {}
    for name, words in SYNONYMS.items():
        for word in words:
            groups.setdefault(word, (f"syn:{name}", 0.15))
    for name, values in SLOTS.items():
        if name == "hotel":
            continue
        for value in values:
            groups.setdefault(value, (f"slot:{name}", 0.5))

    scale = 1.0 / np.sqrt(dim)
    centers: Dict[str, np.ndarray] = {}
    for key in sorted({key for key, _ in groups.values()}):
        centers[key] = rng.standard_normal(dim)

    tokens = synthetic_tokens()
    rows = []
    for token in tokens:
        if token in groups:
            key, spread = groups[token]
            rows.append(centers[key] + spread * rng.standard_normal(dim))
        else:
            rows.append(rng.standard_normal(dim))
    return EmbeddingTable(dim, tokens, scale * np.vstack(rows))


def write_corpus(dialogues: Sequence[Dict], path: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for dialogue in dialogues:
            f.write(json.dumps(dialogue, ensure_ascii=False, sort_keys=True) + "\n")
    return path


def write_embeddings(table: EmbeddingTable, path: str) -> Path:
    """Text format with a "count dim" header line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tokens = sorted(table.index, key=table.index.get)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{len(tokens)} {table.dim}\n")
        for token in tokens:
            values = " ".join(f"{v:.6f}" for v in table.vector(token))
            f.write(f"{token} {values}\n")
    return path


def make_synthetic(out_dir: str, dialogues: int = 500, dim: int = 50, seed: int = 0) -> Tuple[Path, Path]:
    """Write corpus.jsonl and vectors.txt under out_dir."""
    corpus_path = write_corpus(generate_dialogues(dialogues, seed), str(Path(out_dir) / "corpus.jsonl"))
    vectors_path = write_embeddings(synthetic_embeddings(dim, seed), str(Path(out_dir) / "vectors.txt"))
    logger.info(f"Synthetic data written: {corpus_path} ({dialogues} dialogues), {vectors_path} (dim={dim})")
    return corpus_path, vectors_path
