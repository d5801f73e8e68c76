"""Prediction containers: per-turn full states keyed by (dialogue, turn).

A prediction set maps (dialogue_id, turn_index) to a complete state dict
with all 37 slot keys.  Turn indices are 1-based over user turns.  The JSONL
form stores one turn per line, sorted by key, so byte-identical reruns are
possible.
"""

from __future__ import annotations

import json
from pathlib import Path

from .corpus import SLOT_KEYS, Dialogue, empty_state

Predictions = dict[tuple[str, int], dict[str, str]]


class AlignmentError(Exception):
    """Predictions do not line up turn-for-turn with the reference corpus."""


def validate_predictions(preds: Predictions) -> None:
    for (dialogue_id, turn_index), state in preds.items():
        if turn_index < 1:
            raise AlignmentError(
                f"{dialogue_id}: turn index {turn_index} is not 1-based")
        missing = [k for k in SLOT_KEYS if k not in state]
        if missing:
            raise AlignmentError(
                f"{dialogue_id} turn {turn_index}: missing slots {missing[:3]}")


def gold_predictions(dialogues: list[Dialogue]) -> Predictions:
    """The reference states themselves, as a prediction set."""
    preds = {}
    for dialogue in dialogues:
        for i, turn in enumerate(dialogue.user_turns, start=1):
            preds[(dialogue.id, i)] = dict(turn.gold_state)
    return preds


def majority_predictions(dialogues: list[Dialogue]) -> Predictions:
    """The trivial baseline: every slot unset at every turn."""
    preds = {}
    for dialogue in dialogues:
        for i in range(1, len(dialogue.user_turns) + 1):
            preds[(dialogue.id, i)] = empty_state()
    return preds


def predictions_to_jsonl(preds: Predictions) -> str:
    validate_predictions(preds)
    lines = []
    for (dialogue_id, turn_index) in sorted(preds):
        record = {
            "dialogue_id": dialogue_id,
            "turn_index": turn_index,
            "state": {k: preds[(dialogue_id, turn_index)][k] for k in SLOT_KEYS},
        }
        lines.append(json.dumps(record, sort_keys=True))
    return "\n".join(lines) + "\n"


def save_predictions_jsonl(path, preds: Predictions) -> None:
    Path(path).write_text(predictions_to_jsonl(preds), encoding="utf-8")


def load_predictions_jsonl(path) -> Predictions:
    preds: Predictions = {}
    text = Path(path).read_text(encoding="utf-8")
    for line in text.splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        preds[(record["dialogue_id"], int(record["turn_index"]))] = dict(
            record["state"])
    validate_predictions(preds)
    return preds
