"""Candidate generation for open-vocabulary tracking, turn by turn.

Candidates for a turn are the n-grams of everything said so far (user and
agent alike) that also occur as slot values somewhere in training, plus the
three sentinels yes/no/dontcare.  The set only ever grows as the dialogue
proceeds.  The script prints the growth on one dialogue, then the
reachability ceilings this construction implies for the dev set: the
fraction of turns whose full gold state an open-vocabulary tracker could
express at all, next to the analogous closed-vocabulary ceiling.
"""

import tempfile
from pathlib import Path

from hyst.candidates import (
    candidate_sets_for_dialogue,
    global_value_set,
    reachability_report,
)
from hyst.corpus import build_ontology, load_all_splits
from hyst.evaluator import format_table
from hyst.toydata import ToyDataConfig, write_toy_corpus

MAX_NGRAM = 6


def main():
    with tempfile.TemporaryDirectory() as scratch:
        root = Path(scratch) / "corpus"
        write_toy_corpus(root, ToyDataConfig(n_train=80, n_dev=25, n_test=25))
        splits = load_all_splits(root)

    train = splits["train"]
    values = global_value_set(train)
    print(f"{len(values)} distinct slot values observed in training, "
          f"e.g. {sorted(values)[:8]}")

    dialogue = splits["dev"][0]
    print(f"\ncandidate growth on {dialogue.id}:")
    for cs in candidate_sets_for_dialogue(dialogue, values, MAX_NGRAM):
        turn = dialogue.user_turn(cs.turn_index)
        print(f"  turn {cs.turn_index}: {' '.join(turn.tokens) or '(empty)'}")
        print(f"    {len(cs.candidates)} candidates: "
              f"{', '.join(cs.candidates)}")

    ontology = build_ontology(train)
    rows = []
    for name in ("dev", "test"):
        report = reachability_report(splits[name], values, ontology,
                                     MAX_NGRAM)
        rows.append((name, report.n_turns,
                     report.ov_unreachable_pct, report.ov_ceiling_pct,
                     report.jst_unreachable_pct, report.jst_ceiling_pct))
    print("\nreachability of the full gold state, per paradigm:\n")
    print(format_table(rows, ("split", "turns", "ov_unreach_pct",
                              "ov_ceiling", "jst_unreach_pct",
                              "jst_ceiling")))

    report = reachability_report(splits["dev"], values, ontology, MAX_NGRAM)
    worst = sorted(report.per_slot_ov_oov_pct.items(),
                   key=lambda kv: -kv[1])[:5]
    print("slots hardest for candidate generation on dev (gold value "
          "missing from the candidate set):")
    for key, pct in worst:
        print(f"  {key}: {pct:.2f}% of turns with the slot set")


if __name__ == "__main__":
    main()
