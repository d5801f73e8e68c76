"""Train both trackers on a synthetic corpus and watch them track.

The open-vocabulary tracker scores every candidate string against every
slot with per-slot sigmoid heads over the shared dialogue context encoding;
the joint tracker classifies each slot over its closed training vocabulary.
Both are small here (desk-scale dimensions, a few thousand parameters) and
train in seconds on CPU.  The script prints the per-epoch losses, then
walks one dev dialogue showing each tracker's running state next to the
reference, and closes with dev joint goal accuracy against the all-unset
baseline and the candidate-reachability oracle.
"""

import tempfile
from pathlib import Path

from hyst.candidates import global_value_set
from hyst.corpus import load_all_splits
from hyst.encoders import EncoderConfig, TrainConfig
from hyst.evaluator import format_table, joint_goal_accuracy
from hyst.ov_tracker import oracle_track_corpus, train_ov
from hyst.jst_tracker import train_jst
from hyst.predictions import majority_predictions
from hyst.toydata import ToyDataConfig, write_toy_corpus

MAX_NGRAM = 6


def show_tracking(label, tracker, dialogue):
    print(f"\n{label} on {dialogue.id}:")
    states = tracker.track(dialogue)
    for i, (turn, state) in enumerate(zip(dialogue.user_turns, states),
                                      start=1):
        got = {k: v for k, v in state.items() if v != "none"}
        want = {k: v for k, v in turn.gold_state.items() if v != "none"}
        mark = "ok " if state == turn.gold_state else "MISS"
        print(f"  turn {i} [{mark}] predicted {got}")
        if state != turn.gold_state:
            print(f"           reference {want}")


def main():
    with tempfile.TemporaryDirectory() as scratch:
        root = Path(scratch) / "corpus"
        write_toy_corpus(root, ToyDataConfig(n_train=150, n_dev=40,
                                             n_test=40, seed=11))
        splits = load_all_splits(root)
    train, dev = splits["train"], splits["dev"]
    enc = EncoderConfig.desk_scale()

    print("training the open-vocabulary tracker (3 epochs)")
    ov_tracker, ov_result = train_ov(
        train, dev, enc,
        TrainConfig(learning_rate=0.005, batch_size=16, epochs=3, seed=17),
        max_ngram=MAX_NGRAM)
    for e in ov_result.trace:
        print(f"  epoch {e.epoch}: train loss {e.train_loss:.4f}, "
              f"dev loss {e.dev_loss:.4f}")

    print("training the joint tracker (60 epochs, printing every 10th)")
    jst_tracker, jst_result = train_jst(
        train, dev, enc,
        TrainConfig(learning_rate=0.005, batch_size=16, epochs=60, seed=17))
    for e in jst_result.trace:
        if e.epoch % 10 == 0 or e.epoch == 1:
            print(f"  epoch {e.epoch}: train loss {e.train_loss:.4f}, "
                  f"dev loss {e.dev_loss:.4f}")
    print(f"  best dev loss {jst_result.best_dev_loss:.4f} at epoch "
          f"{jst_result.best_epoch} (that checkpoint is kept)")

    dialogue = dev[0]
    show_tracking("open-vocabulary tracker", ov_tracker, dialogue)
    show_tracking("joint tracker", jst_tracker, dialogue)

    values = global_value_set(train)
    scoreboard = [
        ("majority", majority_predictions(dev)),
        ("ov", ov_tracker.track_corpus(dev)),
        ("jst", jst_tracker.track_corpus(dev)),
        ("oracle (ov ceiling)", oracle_track_corpus(dev, values, MAX_NGRAM)),
    ]
    rows = [(label, joint_goal_accuracy(preds, dev))
            for label, preds in scoreboard]
    print("\ndev joint goal accuracy:\n")
    print(format_table(rows, ("method", "joint_acc")))


if __name__ == "__main__":
    main()
