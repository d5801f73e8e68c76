"""Scoring: joint goal accuracy over full states or slot subsets.

A turn counts as correct only when the predicted value matches the reference
for every slot under consideration.  Domain scores restrict the slot set to
one domain but still average over all turns, so a turn with no activity in
that domain counts as correct when the tracker (rightly) leaves its slots
unset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import DOMAIN_SLOTS, DOMAINS, SLOT_KEYS, Dialogue
from .predictions import AlignmentError, Predictions

REPORT_SCHEMA_VERSION = 1


def iter_turn_pairs(preds: Predictions, dialogues: list[Dialogue]):
    """Yield (predicted_state, gold_state) aligned over all user turns."""
    for dialogue in dialogues:
        for i, turn in enumerate(dialogue.user_turns, start=1):
            key = (dialogue.id, i)
            if key not in preds:
                raise AlignmentError(
                    f"no prediction for dialogue {dialogue.id!r} turn {i}")
            yield preds[key], turn.gold_state


def joint_goal_accuracy(preds: Predictions, dialogues: list[Dialogue],
                        slot_subset: tuple[str, ...] = SLOT_KEYS) -> float:
    """Fraction of user turns whose predicted state matches the reference on
    every slot in the subset.  Empty corpora score 0."""
    for key in slot_subset:
        if key not in SLOT_KEYS:
            raise ValueError(f"unknown slot key {key!r}")
    n_turns = 0
    n_correct = 0
    for pred, gold in iter_turn_pairs(preds, dialogues):
        n_turns += 1
        if all(pred[k] == gold[k] for k in slot_subset):
            n_correct += 1
    return n_correct / n_turns if n_turns else 0.0


@dataclass
class EvalReport:
    """Joint accuracy overall, per domain, and per single slot."""

    overall: float
    per_domain: dict[str, float] = field(default_factory=dict)
    per_slot: dict[str, float] = field(default_factory=dict)
    n_turns: int = 0

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "overall": self.overall,
            "per_domain": dict(self.per_domain),
            "per_slot": dict(self.per_slot),
            "n_turns": self.n_turns,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(overall=d["overall"], per_domain=dict(d["per_domain"]),
                   per_slot=dict(d["per_slot"]), n_turns=int(d["n_turns"]))


def evaluate(preds: Predictions, dialogues: list[Dialogue]) -> EvalReport:
    """Full scorecard: overall joint accuracy, per-domain, per-slot."""
    n_turns = sum(len(d.user_turns) for d in dialogues)
    per_domain = {
        domain: joint_goal_accuracy(preds, dialogues, DOMAIN_SLOTS[domain])
        for domain in DOMAINS
    }
    per_slot = {
        key: joint_goal_accuracy(preds, dialogues, (key,)) for key in SLOT_KEYS
    }
    return EvalReport(
        overall=joint_goal_accuracy(preds, dialogues),
        per_domain=per_domain, per_slot=per_slot, n_turns=n_turns)


def format_table(rows: list[tuple], headers: tuple) -> str:
    """Fixed-width text table; numeric cells rendered with 4 decimals."""
    def cell(x):
        return f"{x:.4f}" if isinstance(x, float) else str(x)

    rendered = [tuple(cell(x) for x in row) for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in rendered)) if rendered else len(h)
              for i, h in enumerate(headers)]
    def line(parts):
        return "  ".join(p.ljust(w) for p, w in zip(parts, widths)).rstrip()

    out = [line(headers), line(tuple("-" * w for w in widths))]
    out.extend(line(r) for r in rendered)
    return "\n".join(out) + "\n"


def report_to_text(report: EvalReport, title: str = "evaluation") -> str:
    parts = [f"# {title}", "",
             f"turns scored: {report.n_turns}",
             f"joint goal accuracy: {report.overall:.4f}", ""]
    parts.append(format_table(
        [(d, report.per_domain[d]) for d in DOMAINS
         if d in report.per_domain],
        ("domain", "joint_acc")))
    parts.append(format_table(
        [(k, report.per_slot[k]) for k in SLOT_KEYS if k in report.per_slot],
        ("slot", "accuracy")))
    return "\n".join(parts)


def emit_report(report: EvalReport, json_path, text_path=None,
                title: str = "evaluation") -> None:
    """Write the report as sorted JSON (and optionally a text rendering).

    Both outputs are byte-deterministic for a given report.
    """
    Path(json_path).write_text(
        json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n",
        encoding="utf-8")
    if text_path is not None:
        Path(text_path).write_text(report_to_text(report, title),
                                   encoding="utf-8")


def load_report(json_path) -> EvalReport:
    d = json.loads(Path(json_path).read_text(encoding="utf-8"))
    if d.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise ValueError(
            f"unsupported report schema {d.get('schema_version')!r}")
    return EvalReport.from_dict(d)
