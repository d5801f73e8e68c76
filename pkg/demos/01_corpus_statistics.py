"""Corpus ingestion and statistics on a generated MultiWOZ-format corpus.

Writes a small synthetic corpus to a scratch directory in the real on-disk
layout (data.json, dialogue_acts.json, split list files), ingests it back
through the same loader the pipeline uses, and prints split-level and
per-slot statistics: turn counts, user vocabulary with and without
numeric-ish tokens, how often each slot is unset, and how much of the dev
set would be out of vocabulary for a closed-vocabulary tracker.
"""

import tempfile
from pathlib import Path

from hyst.corpus import (
    SLOT_KEYS,
    build_ontology,
    corpus_stats,
    load_all_splits,
    slot_stats,
)
from hyst.evaluator import format_table
from hyst.toydata import ToyDataConfig, write_toy_corpus


def main():
    with tempfile.TemporaryDirectory() as scratch:
        root = Path(scratch) / "corpus"
        write_toy_corpus(root, ToyDataConfig(n_train=80, n_dev=25, n_test=25))
        print(f"wrote synthetic corpus to {root}")
        print("files:", ", ".join(sorted(p.name for p in root.iterdir())))
        splits = load_all_splits(root)

    rows = []
    for name in ("train", "dev", "test"):
        s = corpus_stats(splits[name])
        rows.append((name, s.n_dialogues, s.n_user_turns,
                     s.user_vocab_with_numeric, s.user_vocab_without_numeric,
                     s.median_user_turn_tokens))
    print()
    print(format_table(rows, ("split", "dialogues", "user_turns", "vocab",
                              "vocab_no_numeric", "median_tokens")))

    ontology = build_ontology(splits["train"])
    slots = slot_stats(splits["train"], splits["dev"], ontology)
    active = [k for k in SLOT_KEYS if slots[k].pct_none < 100.0]
    rows = [(k, slots[k].vocab_size, slots[k].pct_none, slots[k].jst_oov_pct)
            for k in active]
    print("slots that ever get set in this corpus "
          f"({len(active)} of {len(SLOT_KEYS)}):\n")
    print(format_table(rows, ("slot", "train_values", "pct_none_dev",
                              "oov_pct_dev")))

    sample = splits["dev"][0]
    print(f"one dev dialogue ({sample.id}), cumulative states:")
    for i, turn in enumerate(sample.user_turns, start=1):
        set_slots = {k: v for k, v in turn.gold_state.items() if v != "none"}
        print(f"  turn {i}: {' '.join(turn.tokens) or '(empty)'}")
        print(f"          state: {set_slots}")


if __name__ == "__main__":
    main()
