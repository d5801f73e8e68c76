"""Canonical dialogue corpus model for MultiWOZ-2.0-format data.

A dialogue is an alternating sequence of agent and user turns; the leading
agent turn is empty (conversations open with the user).  Every user turn
carries the cumulative gold dialogue state: a total mapping from the 37
``domain.slot`` keys to a normalized value string, with ``"none"`` for slots
not set yet.  Agent turns carry their dialogue-act labels instead.

This module owns ingestion (``load_corpus``), the slot schema, value/text
normalization, the training-side ontology, and deterministic dataset
statistics.
"""

from __future__ import annotations

import hashlib
import json
import re
import statistics
from dataclasses import dataclass
from pathlib import Path

NONE_VALUE = "none"
DONTCARE_VALUE = "dontcare"

DOMAINS = ("taxi", "restaurant", "bus", "hospital", "hotel", "attraction", "train")

# Slot layout per domain.  "semi" slots live under metadata[domain]["semi"],
# booking slots under metadata[domain]["book"] (whose "booked" entry is
# reservation bookkeeping, not a slot).
SEMI_SLOTS = {
    "taxi": ("leaveAt", "destination", "departure", "arriveBy"),
    "restaurant": ("food", "pricerange", "name", "area"),
    "bus": ("leaveAt", "destination", "day", "arriveBy", "departure"),
    "hospital": ("department",),
    "hotel": ("name", "area", "parking", "pricerange", "stars", "internet", "type"),
    "attraction": ("type", "name", "area"),
    "train": ("leaveAt", "destination", "day", "arriveBy", "departure"),
}
BOOK_SLOTS = {
    "taxi": (),
    "restaurant": ("people", "day", "time"),
    "bus": ("people",),
    "hospital": (),
    "hotel": ("people", "day", "stay"),
    "attraction": (),
    "train": ("people",),
}

# Canonical report order of the 37 tracked slots.
_SLOT_ORDER = {
    "taxi": ("leaveAt", "destination", "departure", "arriveBy"),
    "restaurant": ("people", "day", "time", "food", "pricerange", "name", "area"),
    "bus": ("people", "leaveAt", "destination", "day", "arriveBy", "departure"),
    "hospital": ("department",),
    "hotel": ("people", "day", "stay", "name", "area", "parking", "pricerange",
              "stars", "internet", "type"),
    "attraction": ("type", "name", "area"),
    "train": ("people", "leaveAt", "destination", "day", "arriveBy", "departure"),
}

SLOT_KEYS: tuple[str, ...] = tuple(
    f"{domain}.{slot}" for domain in DOMAINS for slot in _SLOT_ORDER[domain]
)
SLOT_INDEX: dict[str, int] = {key: i for i, key in enumerate(SLOT_KEYS)}
DOMAIN_SLOTS: dict[str, tuple[str, ...]] = {
    domain: tuple(f"{domain}.{slot}" for slot in _SLOT_ORDER[domain])
    for domain in DOMAINS
}


class CorpusError(Exception):
    """Raised on malformed or inconsistent corpus files."""


@dataclass(frozen=True, order=True)
class SlotKey:
    """A tracked slot, rendered canonically as ``domain.slot``."""

    domain: str
    slot: str

    def render(self) -> str:
        return f"{self.domain}.{self.slot}"

    @classmethod
    def parse(cls, text: str) -> "SlotKey":
        domain, sep, slot = text.partition(".")
        if not sep or not domain or not slot:
            raise ValueError(f"not a domain.slot key: {text!r}")
        return cls(domain, slot)

    def __str__(self) -> str:
        return self.render()


ALL_SLOT_KEYS: tuple[SlotKey, ...] = tuple(SlotKey.parse(k) for k in SLOT_KEYS)


# --- text and value normalization -------------------------------------------

# Split these characters into their own tokens; '.' and ':' stay attached
# between digits so clock times ("17:30") and decimals survive as one token.
_SPLIT_RE = re.compile(r'[!?,;"()]|(?<!\d)[.:]|[.:](?!\d)')
_WS_RE = re.compile(r"\s+")

_NONE_ALIASES = {"", "none", "not mentioned"}
_DONTCARE_ALIASES = {
    "dontcare", "dont care", "don't care", "do n't care", "do not care",
}


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace after separating punctuation."""
    text = _SPLIT_RE.sub(lambda m: f" {m.group(0)} ", text.lower())
    return text.split()


def normalize_value(value: str) -> str:
    """Canonical form used for every slot-value equality test.

    Lowercases, trims, collapses internal whitespace, and folds the unset /
    dontcare spelling variants found in raw annotations onto the two
    sentinels.
    """
    v = _WS_RE.sub(" ", value.strip().lower())
    if v in _NONE_ALIASES:
        return NONE_VALUE
    if v in _DONTCARE_ALIASES:
        return DONTCARE_VALUE
    return v


def empty_state() -> dict[str, str]:
    """A total state with every slot unset."""
    return dict.fromkeys(SLOT_KEYS, NONE_VALUE)


# --- turns and dialogues -----------------------------------------------------


@dataclass
class Turn:
    speaker: str  # "agent" | "user"
    text: str
    tokens: tuple[str, ...]
    acts: tuple[str, ...] = ()  # agent turns only
    gold_state: dict[str, str] | None = None  # user turns only


@dataclass
class Dialogue:
    id: str
    turns: list[Turn]

    @property
    def user_turns(self) -> list[Turn]:
        return [t for t in self.turns if t.speaker == "user"]

    def user_turn(self, i: int) -> Turn:
        """The i-th user turn, 1-based."""
        return self.turns[2 * i - 1]


# --- ingestion ---------------------------------------------------------------


def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed JSON in {path}: {exc}") from exc


def _read_split_list(root: Path, stem: str) -> list[str]:
    """Read a split list file (JSON array or one dialogue name per line)."""
    for name in (f"{stem}.json", f"{stem}.txt"):
        path = root / name
        if path.exists():
            raw = path.read_text(encoding="utf-8")
            try:
                ids = json.loads(raw)
            except json.JSONDecodeError:
                ids = [line.strip() for line in raw.splitlines() if line.strip()]
            if not isinstance(ids, list):
                raise CorpusError(f"{path} does not contain a list of dialogue ids")
            return [str(i) for i in ids]
    return []


def _scalar_value(raw) -> str:
    if isinstance(raw, str):
        return raw
    if isinstance(raw, list):
        return _scalar_value(raw[0]) if raw else ""
    return str(raw)


def _state_from_metadata(metadata, dialogue_id: str) -> dict[str, str]:
    if not isinstance(metadata, dict):
        raise CorpusError(f"dialogue {dialogue_id}: system turn without state metadata")
    state = empty_state()
    for domain in DOMAINS:
        block = metadata.get(domain)
        if not isinstance(block, dict):
            continue
        semi = block.get("semi", {})
        for slot in SEMI_SLOTS[domain]:
            if slot in semi:
                state[f"{domain}.{slot}"] = normalize_value(_scalar_value(semi[slot]))
        book = block.get("book", {})
        for slot in BOOK_SLOTS[domain]:
            if slot in book:
                state[f"{domain}.{slot}"] = normalize_value(_scalar_value(book[slot]))
    return state


def _act_labels(entry) -> tuple[str, ...]:
    """Render an act annotation block as flat labels like ``Hotel-Request(Price)``.

    Unannotated turns (the literal string "No Annotation", or a missing
    entry) yield no labels.  Acts whose slot is "none" render as the bare
    act name.
    """
    if not isinstance(entry, dict):
        return ()
    labels = []
    for act, pairs in entry.items():
        if not isinstance(pairs, list) or not pairs:
            labels.append(str(act))
            continue
        for pair in pairs:
            slot = str(pair[0]) if isinstance(pair, list) and pair else "none"
            if slot.lower() == "none":
                labels.append(str(act))
            else:
                labels.append(f"{act}({slot})")
    return tuple(labels)


def _build_dialogue(dialogue_id: str, record, acts_record) -> Dialogue:
    log = record.get("log") if isinstance(record, dict) else None
    if not isinstance(log, list) or not log or len(log) % 2 != 0:
        raise CorpusError(
            f"dialogue {dialogue_id}: turn log must alternate user/system "
            f"turns and end with a system turn"
        )
    acts_record = acts_record if isinstance(acts_record, dict) else {}
    # Conversations open with the user, so the first agent turn is empty.
    turns: list[Turn] = [Turn(speaker="agent", text="", tokens=())]
    for i in range(0, len(log), 2):
        user, system = log[i], log[i + 1]
        user_text = str(user.get("text", ""))
        gold = _state_from_metadata(system.get("metadata"), dialogue_id)
        turns.append(
            Turn(
                speaker="user",
                text=user_text,
                tokens=tuple(tokenize(user_text)),
                gold_state=gold,
            )
        )
        if i + 2 < len(log):
            # The closing system response follows the last user turn and can
            # never be conditioned on, so it is dropped.
            system_text = str(system.get("text", ""))
            turns.append(
                Turn(
                    speaker="agent",
                    text=system_text,
                    tokens=tuple(tokenize(system_text)),
                    acts=_act_labels(acts_record.get(str(i // 2 + 1))),
                )
            )
    return Dialogue(id=dialogue_id, turns=turns)


def _acts_key(dialogue_id: str) -> str:
    return dialogue_id[:-5] if dialogue_id.endswith(".json") else dialogue_id


def load_corpus(path, split: str) -> list[Dialogue]:
    """Load one split of a MultiWOZ-2.0-format corpus directory.

    ``path`` must contain ``data.json`` (all dialogues keyed by id),
    ``dialogue_acts.json`` (system-act annotations), and the
    ``valListFile``/``testListFile`` split lists.  The train split is
    everything not named by the two list files, in ``data.json`` order.

    An empty directory is an empty corpus.  A dialogue named by a split list
    but absent from ``data.json`` is a hard error, as is malformed JSON.
    """
    if split not in ("train", "dev", "test"):
        raise ValueError(f"unknown split: {split!r}")
    root = Path(path)
    if not root.is_dir():
        raise CorpusError(f"corpus directory not found: {root}")
    data_path = root / "data.json"
    if not data_path.exists():
        if not any(root.iterdir()):
            return []
        raise CorpusError(f"{data_path} not found")
    data = _read_json(data_path)
    if not isinstance(data, dict):
        raise CorpusError(f"{data_path} must map dialogue ids to dialogues")
    acts_path = root / "dialogue_acts.json"
    acts = _read_json(acts_path) if acts_path.exists() else {}

    dev_ids = _read_split_list(root, "valListFile")
    test_ids = _read_split_list(root, "testListFile")
    if split == "dev":
        wanted = dev_ids
    elif split == "test":
        wanted = test_ids
    else:
        held_out = set(dev_ids) | set(test_ids)
        wanted = [d for d in data if d not in held_out]

    dialogues = []
    for dialogue_id in wanted:
        if dialogue_id not in data:
            raise CorpusError(
                f"dialogue {dialogue_id} listed for split {split!r} "
                f"but missing from {data_path}"
            )
        record = data[dialogue_id]
        acts_record = acts.get(_acts_key(dialogue_id), {})
        dialogues.append(_build_dialogue(dialogue_id, record, acts_record))
    return dialogues


def load_all_splits(path) -> dict[str, list[Dialogue]]:
    return {split: load_corpus(path, split) for split in ("train", "dev", "test")}


def subsample(dialogues: list[Dialogue], fraction: float) -> list[Dialogue]:
    """Deterministic id-hash subsample, independent of corpus order.

    Each dialogue is kept iff the leading 32 bits of the MD5 of its id fall
    below the fraction, so the same dialogue is always kept or dropped
    regardless of what else is in the list.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if fraction == 1.0:
        return list(dialogues)
    cutoff = fraction * 2**32
    kept = []
    for dialogue in dialogues:
        digest = hashlib.md5(dialogue.id.encode("utf-8")).digest()
        if int.from_bytes(digest[:4], "big") < cutoff:
            kept.append(dialogue)
    return kept


# --- ontology ----------------------------------------------------------------


@dataclass
class Ontology:
    """Per-slot value vocabulary observed in the training split.

    ``vocab`` lists each slot's values in a fixed order: the two sentinels
    first, then the remaining observed values sorted.  ``observed`` counts
    the distinct gold values actually seen for the slot in training
    (including "none", which every rarely-set slot exhibits).
    """

    vocab: dict[str, tuple[str, ...]]
    observed: dict[str, int]

    def values(self, slot_key: str) -> tuple[str, ...]:
        return self.vocab[slot_key]

    def size(self, slot_key: str) -> int:
        return len(self.vocab[slot_key])

    def to_dict(self) -> dict:
        return {"vocab": {k: list(v) for k, v in self.vocab.items()},
                "observed": dict(self.observed)}

    @classmethod
    def from_dict(cls, payload: dict) -> "Ontology":
        return cls(
            vocab={k: tuple(v) for k, v in payload["vocab"].items()},
            observed={k: int(v) for k, v in payload["observed"].items()},
        )


def build_ontology(train: list[Dialogue]) -> Ontology:
    """Collect each slot's training-observed values plus the two sentinels."""
    if not train:
        raise ValueError("ontology requires a nonempty training corpus")
    seen: dict[str, set[str]] = {key: set() for key in SLOT_KEYS}
    for dialogue in train:
        for turn in dialogue.user_turns:
            for key, value in turn.gold_state.items():
                seen[key].add(value)
    vocab = {}
    for key, values in seen.items():
        rest = sorted(values - {NONE_VALUE, DONTCARE_VALUE})
        vocab[key] = (NONE_VALUE, DONTCARE_VALUE, *rest)
    return Ontology(vocab=vocab, observed={k: len(v) for k, v in seen.items()})


# --- dataset statistics ------------------------------------------------------

_NUMERIC_RE = re.compile(r"^\d+$|^\d{1,2}:\d{2}$")


def is_numeric_token(token: str) -> bool:
    """True for integers and HH:MM clock times."""
    return _NUMERIC_RE.match(token) is not None


@dataclass
class CorpusStats:
    n_dialogues: int
    n_user_turns: int
    user_vocab_with_numeric: int
    user_vocab_without_numeric: int
    median_user_turn_tokens: float


def corpus_stats(dialogues: list[Dialogue]) -> CorpusStats:
    """Dialogue/turn counts, user-side vocabulary sizes, and median turn length."""
    vocab: set[str] = set()
    lengths: list[int] = []
    n_turns = 0
    for dialogue in dialogues:
        for turn in dialogue.user_turns:
            n_turns += 1
            vocab.update(turn.tokens)
            lengths.append(len(turn.tokens))
    return CorpusStats(
        n_dialogues=len(dialogues),
        n_user_turns=n_turns,
        user_vocab_with_numeric=len(vocab),
        user_vocab_without_numeric=sum(1 for t in vocab if not is_numeric_token(t)),
        median_user_turn_tokens=float(statistics.median(lengths)) if lengths else 0.0,
    )


@dataclass
class SlotStats:
    vocab_size: int
    pct_none: float
    jst_oov_pct: float


def slot_stats(train: list[Dialogue], dev: list[Dialogue],
               ontology: Ontology) -> dict[str, SlotStats]:
    """Per-slot breakdown over the dev split.

    ``pct_none`` is the share of dev user turns where the slot is unset;
    ``jst_oov_pct`` the share whose gold value falls outside the slot's
    training vocabulary.  ``vocab_size`` counts distinct training-observed
    gold values for the slot.
    """
    none_counts = dict.fromkeys(SLOT_KEYS, 0)
    oov_counts = dict.fromkeys(SLOT_KEYS, 0)
    vocab_sets = {key: frozenset(ontology.vocab[key]) for key in SLOT_KEYS}
    n_turns = 0
    for dialogue in dev:
        for turn in dialogue.user_turns:
            n_turns += 1
            for key, value in turn.gold_state.items():
                if value == NONE_VALUE:
                    none_counts[key] += 1
                if value not in vocab_sets[key]:
                    oov_counts[key] += 1
    stats = {}
    for key in SLOT_KEYS:
        if n_turns:
            pct_none = 100.0 * none_counts[key] / n_turns
            oov = 100.0 * oov_counts[key] / n_turns
        else:
            pct_none, oov = 100.0, 0.0
        stats[key] = SlotStats(
            vocab_size=ontology.observed[key],
            pct_none=pct_none,
            jst_oov_pct=oov,
        )
    return stats


# --- canonical JSON-lines serialization --------------------------------------


def dialogue_to_dict(dialogue: Dialogue) -> dict:
    turns = []
    for turn in dialogue.turns:
        payload = {"speaker": turn.speaker, "text": turn.text,
                   "tokens": list(turn.tokens)}
        if turn.speaker == "agent":
            payload["acts"] = list(turn.acts)
        else:
            payload["state"] = dict(turn.gold_state)
        turns.append(payload)
    return {"id": dialogue.id, "turns": turns}


def dialogue_from_dict(payload: dict) -> Dialogue:
    turns = []
    for raw in payload["turns"]:
        if raw["speaker"] == "agent":
            turns.append(Turn("agent", raw["text"], tuple(raw["tokens"]),
                              acts=tuple(raw.get("acts", ()))))
        else:
            turns.append(Turn("user", raw["text"], tuple(raw["tokens"]),
                              gold_state=dict(raw["state"])))
    return Dialogue(id=payload["id"], turns=turns)


def corpus_to_jsonl(dialogues: list[Dialogue]) -> str:
    """One dialogue per line in the canonical serialization."""
    return "".join(json.dumps(dialogue_to_dict(d), sort_keys=True) + "\n"
                   for d in dialogues)


def save_corpus_jsonl(path, dialogues: list[Dialogue]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(corpus_to_jsonl(dialogues))


def load_corpus_jsonl(path) -> list[Dialogue]:
    dialogues = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                dialogues.append(dialogue_from_dict(json.loads(line)))
    return dialogues
