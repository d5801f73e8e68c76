"""Open candidate sets for the open-vocabulary tracker.

A turn's candidate set is every word n-gram uttered so far in the dialogue
(agent and user sides alike) that is also a known training value, plus the
three implied values ``yes``/``no``/``dontcare`` that are rarely spoken
verbatim.  Candidate order is first occurrence in the dialogue with the
implied values appended, so downstream batches are reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .corpus import (
    DONTCARE_VALUE,
    NONE_VALUE,
    SLOT_KEYS,
    Dialogue,
    Ontology,
)

SENTINEL_CANDIDATES = ("yes", "no", DONTCARE_VALUE)

DEFAULT_MAX_NGRAM = 8


def global_value_set(train: list[Dialogue]) -> set[str]:
    """All normalized slot values observed in training, over every slot.

    "none" marks an unset slot rather than a speakable value and is excluded.
    """
    values: set[str] = set()
    for dialogue in train:
        for turn in dialogue.user_turns:
            values.update(turn.gold_state.values())
    values.discard(NONE_VALUE)
    return values


def iter_ngrams(tokens: Iterable[str], max_n: int) -> Iterator[str]:
    """Yield contiguous n-grams (n = 1..max_n) in scan order.

    Scan order is by start position, then by length, which defines the
    first-occurrence order used for candidate sets.
    """
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    tokens = list(tokens)
    for start in range(len(tokens)):
        for n in range(1, min(max_n, len(tokens) - start) + 1):
            yield " ".join(tokens[start:start + n])


def extract_ngrams(tokens: Iterable[str], max_n: int) -> set[str]:
    """All distinct space-joined n-grams of length 1..max_n."""
    return set(iter_ngrams(tokens, max_n))


@dataclass
class CandidateSet:
    turn_index: int  # 1-based user turn index
    candidates: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.candidates)

    def index(self, value: str) -> int:
        return self.candidates.index(value)

    def __contains__(self, value: str) -> bool:
        return value in self.candidates


def candidate_sets_for_dialogue(
    dialogue: Dialogue, values: set[str], max_n: int = DEFAULT_MAX_NGRAM
) -> list[CandidateSet]:
    """A candidate set per user turn, built incrementally over the history.

    History only grows, so each turn's candidates extend the previous
    turn's: candidates(i) is a subset of candidates(i+1).
    """
    sets: list[CandidateSet] = []
    ordered: list[str] = []
    seen: set[str] = set()
    turn_index = 0
    for turn in dialogue.turns:
        for ngram in iter_ngrams(turn.tokens, max_n):
            if ngram in values and ngram not in seen:
                seen.add(ngram)
                ordered.append(ngram)
        if turn.speaker == "user":
            turn_index += 1
            tail = [s for s in SENTINEL_CANDIDATES if s not in seen]
            sets.append(CandidateSet(turn_index, tuple(ordered) + tuple(tail)))
    return sets


def build_candidate_set(
    dialogue: Dialogue,
    i: int,
    values: set[str],
    max_n: int = DEFAULT_MAX_NGRAM,
) -> CandidateSet:
    """Candidate set after the i-th user turn (1-based)."""
    sets = candidate_sets_for_dialogue(dialogue, values, max_n)
    if not 1 <= i <= len(sets):
        raise IndexError(f"dialogue {dialogue.id} has no user turn {i}")
    return sets[i - 1]


def label_candidates(cands: CandidateSet, gold: dict[str, str]) -> np.ndarray:
    """Binary label matrix [n_candidates, n_slots] against a cumulative state.

    A (candidate, slot) pair is positive iff the candidate string equals the
    slot's gold value and the slot is set.  The implied yes/no/dontcare
    candidates pick up the slots whose gold values never appear verbatim
    (e.g. parking/internet).  Slots are single-valued, so each column has at
    most one positive row.
    """
    labels = np.zeros((len(cands.candidates), len(SLOT_KEYS)), dtype=np.int8)
    position = {c: j for j, c in enumerate(cands.candidates)}
    for k, key in enumerate(SLOT_KEYS):
        value = gold[key]
        if value == NONE_VALUE:
            continue
        j = position.get(value)
        if j is not None:
            labels[j, k] = 1
    return labels


@dataclass
class ReachabilityReport:
    """Turn-level unreachable rates for both paradigms, in percent.

    A turn is unreachable for the open-vocabulary tracker when some set slot's
    gold value is missing from that turn's candidate set; for the joint
    tracker when some gold value falls outside its slot vocabulary.  Ceilings
    are 100 minus the respective rate: no tracker of that paradigm can
    exceed them on joint accuracy.
    """

    n_turns: int
    ov_unreachable_pct: float
    jst_unreachable_pct: float
    per_slot_ov_oov_pct: dict[str, float]

    @property
    def ov_ceiling_pct(self) -> float:
        return 100.0 - self.ov_unreachable_pct

    @property
    def jst_ceiling_pct(self) -> float:
        return 100.0 - self.jst_unreachable_pct


def reachability_report(
    corpus: list[Dialogue],
    values: set[str],
    ontology: Ontology,
    max_n: int = DEFAULT_MAX_NGRAM,
) -> ReachabilityReport:
    """Measure how much of a corpus each paradigm can express at all."""
    vocab_sets = {key: frozenset(ontology.vocab[key]) for key in SLOT_KEYS}
    n_turns = 0
    ov_bad_turns = 0
    jst_bad_turns = 0
    ov_bad_slot = dict.fromkeys(SLOT_KEYS, 0)
    for dialogue in corpus:
        cand_sets = candidate_sets_for_dialogue(dialogue, values, max_n)
        for turn, cands in zip(dialogue.user_turns, cand_sets):
            n_turns += 1
            members = set(cands.candidates)
            ov_bad = False
            jst_bad = False
            for key, value in turn.gold_state.items():
                if value != NONE_VALUE and value not in members:
                    ov_bad = True
                    ov_bad_slot[key] += 1
                if value not in vocab_sets[key]:
                    jst_bad = True
            ov_bad_turns += ov_bad
            jst_bad_turns += jst_bad
    if n_turns == 0:
        return ReachabilityReport(0, 0.0, 0.0, dict.fromkeys(SLOT_KEYS, 0.0))
    return ReachabilityReport(
        n_turns=n_turns,
        ov_unreachable_pct=100.0 * ov_bad_turns / n_turns,
        jst_unreachable_pct=100.0 * jst_bad_turns / n_turns,
        per_slot_ov_oov_pct={
            key: 100.0 * count / n_turns for key, count in ov_bad_slot.items()
        },
    )


# --- persistence --------------------------------------------------------------


def candidate_sets_to_jsonl(corpus: list[Dialogue], values: set[str],
                            max_n: int = DEFAULT_MAX_NGRAM) -> str:
    """Per-turn candidate sets keyed by (dialogue id, turn index), one per line."""
    lines = []
    for dialogue in corpus:
        for cands in candidate_sets_for_dialogue(dialogue, values, max_n):
            record = {
                "dialogue_id": dialogue.id,
                "turn_index": cands.turn_index,
                "candidates": list(cands.candidates),
            }
            lines.append(json.dumps(record, sort_keys=True))
    return "\n".join(lines) + "\n" if lines else ""


def save_candidate_sets_jsonl(path, corpus: list[Dialogue], values: set[str],
                              max_n: int = DEFAULT_MAX_NGRAM) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(candidate_sets_to_jsonl(corpus, values, max_n))


def load_candidate_sets_jsonl(path) -> dict[tuple[str, int], CandidateSet]:
    sets = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            record = json.loads(line)
            key = (record["dialogue_id"], int(record["turn_index"]))
            sets[key] = CandidateSet(key[1], tuple(record["candidates"]))
    return sets
