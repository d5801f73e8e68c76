"""Per-slot method selection and multi-run vote aggregation.

The hybrid tracker is not a third model: on held-out data each slot is
assigned whichever tracker (joint fixed-vocabulary or open-vocabulary) gets
that slot right more often, and test predictions are stitched together slot
by slot from the chosen trackers' outputs.  Independently trained runs of
the same tracker are merged first by a per-slot majority vote.
"""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

from .corpus import SLOT_KEYS, Dialogue
from .evaluator import iter_turn_pairs
from .predictions import AlignmentError, Predictions

METHOD_JST = "JST"
METHOD_OVST = "OVST"
METHODS = (METHOD_JST, METHOD_OVST)


def per_slot_accuracy(preds: Predictions,
                      dialogues: list[Dialogue]) -> dict[str, float]:
    """Fraction of user turns each slot is predicted exactly right."""
    n_turns = 0
    correct = Counter()
    for pred, gold in iter_turn_pairs(preds, dialogues):
        n_turns += 1
        for key in SLOT_KEYS:
            if pred[key] == gold[key]:
                correct[key] += 1
    if n_turns == 0:
        return {key: 0.0 for key in SLOT_KEYS}
    return {key: correct[key] / n_turns for key in SLOT_KEYS}


def select_methods(jst_acc: dict[str, float],
                   ov_acc: dict[str, float]) -> dict[str, str]:
    """Per slot, the method with higher held-out accuracy; ties go to the
    joint tracker."""
    assignment = {}
    for key in SLOT_KEYS:
        assignment[key] = (METHOD_OVST if ov_acc[key] > jst_acc[key]
                           else METHOD_JST)
    return assignment


def combine(preds_by_method: dict[str, Predictions],
            assignment: dict[str, str]) -> Predictions:
    """Stitch a prediction set together slot-by-slot per the assignment."""
    for key, method in assignment.items():
        if method not in preds_by_method:
            raise ValueError(f"slot {key} assigned to unknown method {method!r}")
    turn_keys = None
    for method, preds in preds_by_method.items():
        keys = set(preds)
        if turn_keys is None:
            turn_keys = keys
        elif keys != turn_keys:
            missing = sorted(turn_keys ^ keys)[:3]
            raise AlignmentError(
                f"method {method!r} covers different turns, e.g. {missing}")
    combined: Predictions = {}
    for turn_key in turn_keys or set():
        combined[turn_key] = {
            key: preds_by_method[assignment[key]][turn_key][key]
            for key in SLOT_KEYS
        }
    return combined


def hybrid_dev_accuracy(jst_acc: dict[str, float],
                        ov_acc: dict[str, float]) -> dict[str, float]:
    """The selector's per-slot accuracy on the data it was selected on is the
    per-slot max by construction."""
    return {key: max(jst_acc[key], ov_acc[key]) for key in SLOT_KEYS}


def ensemble_vote(runs: list[Predictions],
                  dev_joint_accuracies: list[float]) -> Predictions:
    """Per-slot majority vote across independently trained runs.

    Each run carries its held-out joint accuracy.  Per (turn, slot), the
    value predicted by the most runs wins; ties prefer the value backed by
    the run with the best held-out score, then the lexicographically
    smallest value.  The result does not depend on the order runs are
    listed in.
    """
    if not runs:
        raise ValueError("ensemble needs at least one run")
    if len(runs) != len(dev_joint_accuracies):
        raise ValueError(
            f"{len(runs)} runs but {len(dev_joint_accuracies)} accuracies")
    turn_keys = set(runs[0])
    for i, preds in enumerate(runs[1:], start=2):
        if set(preds) != turn_keys:
            raise AlignmentError(f"run {i} covers a different set of turns")
    voted: Predictions = {}
    for turn_key in turn_keys:
        state = {}
        for key in SLOT_KEYS:
            votes = Counter()
            backing = {}
            for preds, acc in zip(runs, dev_joint_accuracies):
                value = preds[turn_key][key]
                votes[value] += 1
                backing[value] = max(backing.get(value, acc), acc)
            state[key] = min(votes,
                             key=lambda v: (-votes[v], -backing[v], v))
        voted[turn_key] = state
    return voted


def save_assignment(path, assignment: dict[str, str]) -> None:
    for key in SLOT_KEYS:
        if assignment.get(key) not in METHODS:
            raise ValueError(
                f"slot {key} has no valid method in the assignment")
    Path(path).write_text(
        json.dumps({k: assignment[k] for k in SLOT_KEYS},
                   sort_keys=True, indent=2) + "\n",
        encoding="utf-8")


def load_assignment(path) -> dict[str, str]:
    assignment = json.loads(Path(path).read_text(encoding="utf-8"))
    for key in SLOT_KEYS:
        if assignment.get(key) not in METHODS:
            raise ValueError(f"{path}: slot {key} missing or has bad method")
    return {k: assignment[k] for k in SLOT_KEYS}
