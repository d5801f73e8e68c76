"""Per-slot hybrid selection and multi-seed vote aggregation.

Neither tracking paradigm dominates: the joint tracker is strong on small
closed vocabularies, the open-vocabulary tracker is the only one that can
produce values it never saw in training.  The hybrid tracker exploits this
by picking, per slot, whichever paradigm scores higher on dev, then
stitching test predictions together slot by slot.  Independently seeded
runs of one tracker are merged first by a per-slot majority vote.  To keep
the demo fast the open-vocabulary side uses oracle candidate scores (its
reachability ceiling); the mechanics are identical with a trained model.
"""

import tempfile
from pathlib import Path

from hyst.candidates import global_value_set
from hyst.corpus import SLOT_KEYS, load_all_splits
from hyst.encoders import EncoderConfig, TrainConfig
from hyst.evaluator import format_table, joint_goal_accuracy
from hyst.hybrid import (
    METHOD_JST,
    METHOD_OVST,
    combine,
    ensemble_vote,
    per_slot_accuracy,
    select_methods,
)
from hyst.jst_tracker import train_jst
from hyst.ov_tracker import oracle_track_corpus
from hyst.toydata import ToyDataConfig, write_toy_corpus

MAX_NGRAM = 6
SEEDS = (13, 29, 47)


def main():
    with tempfile.TemporaryDirectory() as scratch:
        root = Path(scratch) / "corpus"
        write_toy_corpus(root, ToyDataConfig(n_train=150, n_dev=40,
                                             n_test=40, seed=11))
        splits = load_all_splits(root)
    train, dev, test = splits["train"], splits["dev"], splits["test"]
    enc = EncoderConfig.desk_scale()

    print(f"training {len(SEEDS)} joint-tracker runs (seeds "
          f"{', '.join(map(str, SEEDS))})")
    runs_dev, runs_test, dev_accs = [], [], []
    for seed in SEEDS:
        tracker, _ = train_jst(
            train, dev, enc,
            TrainConfig(learning_rate=0.005, batch_size=16, epochs=60,
                        seed=seed))
        dev_preds = tracker.track_corpus(dev)
        acc = joint_goal_accuracy(dev_preds, dev)
        print(f"  seed {seed}: dev joint accuracy {acc:.4f}")
        runs_dev.append(dev_preds)
        runs_test.append(tracker.track_corpus(test))
        dev_accs.append(acc)

    jst_dev = ensemble_vote(runs_dev, dev_accs)
    jst_test = ensemble_vote(runs_test, dev_accs)
    print(f"  per-slot vote of the {len(SEEDS)} runs: dev "
          f"{joint_goal_accuracy(jst_dev, dev):.4f}")

    values = global_value_set(train)
    ov_dev = oracle_track_corpus(dev, values, MAX_NGRAM)
    ov_test = oracle_track_corpus(test, values, MAX_NGRAM)

    jst_slot = per_slot_accuracy(jst_dev, dev)
    ov_slot = per_slot_accuracy(ov_dev, dev)
    assignment = select_methods(jst_slot, ov_slot)
    chosen_ov = [k for k in SLOT_KEYS if assignment[k] == METHOD_OVST]
    print(f"\nper-slot selection on dev: open-vocabulary wins "
          f"{len(chosen_ov)} of {len(SLOT_KEYS)} slots")
    rows = [(k, jst_slot[k], ov_slot[k], assignment[k])
            for k in SLOT_KEYS if jst_slot[k] != ov_slot[k]]
    print("slots where the paradigms actually differ on dev:\n")
    print(format_table(rows, ("slot", "jst_acc", "ovst_acc", "chosen")))

    hybrid_test = combine({METHOD_JST: jst_test, METHOD_OVST: ov_test},
                          assignment)
    rows = [
        ("jst ensemble", joint_goal_accuracy(jst_test, test)),
        ("ov oracle", joint_goal_accuracy(ov_test, test)),
        ("hybrid", joint_goal_accuracy(hybrid_test, test)),
    ]
    print("test joint goal accuracy:\n")
    print(format_table(rows, ("method", "joint_acc")))


if __name__ == "__main__":
    main()
