"""Acceptance battery: one test per criterion, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s`` so the verdict lines are
visible alongside the pass/fail markers.

Criteria 1, 2, 3, and 6 compare against reference statistics of the
original MultiWOZ-2.0 distribution, so they need the real corpus: set
``HYST_DATA`` to its directory, or they skip with that reason.  Criterion 4
runs its training-property battery on a 10% deterministic subsample of the
real corpus when available and otherwise on the bundled synthetic corpus,
where the properties hold all the same.  Criterion 5 always runs.
Criterion 6 retrains everything at full scale (hours); it additionally
requires ``HYST_FULL_EVAL=1``, and reuses ``HYST_FULL_WORKDIR`` if that
points at a finished pipeline run.
"""

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from hyst.candidates import global_value_set, reachability_report
from hyst.corpus import (
    SLOT_KEYS,
    build_ontology,
    corpus_stats,
    load_all_splits,
    slot_stats,
    subsample,
)
from hyst.encoders import EncoderConfig, TrainConfig
from hyst.evaluator import joint_goal_accuracy
from hyst.hybrid import (
    METHOD_JST,
    METHOD_OVST,
    combine,
    per_slot_accuracy,
    select_methods,
)
from hyst.jst_tracker import train_jst
from hyst.ov_tracker import oracle_track_corpus, train_ov
from hyst.predictions import majority_predictions

# Reference statistics of the original MultiWOZ-2.0 distribution, per split.
REFERENCE_N_DIALOGUES = {"train": 8_483, "dev": 1_000, "test": 1_000}
REFERENCE_N_USER_TURNS = {"train": 56_781, "dev": 7_374, "test": 7_372}
REFERENCE_MEDIAN_TURN_TOKENS = 11
REFERENCE_VOCAB_WITH_NUMERIC = {"train": 4311, "dev": 1875, "test": 1840}
REFERENCE_VOCAB_WITHOUT_NUMERIC = {"train": 3805, "dev": 1709, "test": 1646}

# Per-slot reference: training vocabulary size and the percentage of dev
# turns where the slot is unset.
REFERENCE_SLOT_STATS = {
    "taxi.leaveAt": (119, 96.19),
    "taxi.destination": (277, 92.76),
    "taxi.departure": (261, 92.87),
    "taxi.arriveBy": (101, 96.84),
    "restaurant.people": (9, 84.10),
    "restaurant.day": (10, 84.11),
    "restaurant.time": (61, 84.22),
    "restaurant.food": (104, 71.65),
    "restaurant.pricerange": (11, 74.62),
    "restaurant.name": (183, 87.14),
    "restaurant.area": (19, 74.02),
    "bus.people": (1, 100.0),
    "bus.leaveAt": (2, 99.99),
    "bus.destination": (5, 99.94),
    "bus.day": (2, 99.99),
    "bus.arriveBy": (1, 100.0),
    "bus.departure": (2, 99.94),
    "hospital.department": (52, 99.30),
    "hotel.people": (9, 84.61),
    "hotel.day": (11, 84.59),
    "hotel.stay": (9, 84.64),
    "hotel.name": (89, 84.80),
    "hotel.area": (24, 80.82),
    "hotel.parking": (8, 85.58),
    "hotel.pricerange": (9, 82.74),
    "hotel.stars": (13, 83.59),
    "hotel.internet": (8, 85.88),
    "hotel.type": (18, 82.18),
    "attraction.type": (37, 81.45),
    "attraction.name": (137, 89.71),
    "attraction.area": (16, 82.80),
    "train.people": (13, 89.11),
    "train.leaveAt": (134, 86.68),
    "train.destination": (29, 71.89),
    "train.day": (11, 72.90),
    "train.arriveBy": (107, 86.81),
    "train.departure": (35, 72.38),
}

# Turn-level unreachable rates on dev, whole state at once (percent).
REFERENCE_OV_UNREACHABLE_PCT = 25.60
REFERENCE_JST_UNREACHABLE_PCT = 2.48

# Test-set joint goal accuracy (percent): all-unset baseline, then single
# runs and 3-seed per-slot-vote ensembles of each tracker.
REFERENCE_MAJORITY_PCT = 1.5
REFERENCE_SINGLE_PCT = {"ov": 29.73, "jst": 38.42, "hyst": 42.33}
REFERENCE_ENSEMBLE_PCT = {"ov": 31.11, "jst": 40.74, "hyst": 44.24}
FULL_SCALE_BAND = 3.0


def _verdict(criterion: int, status: str, detail: str) -> None:
    print(f"\n[criterion {criterion}] {status}: {detail}")


@pytest.fixture(scope="module")
def real_splits(real_root):
    return load_all_splits(real_root)


class TestCriterion1CorpusCounts:
    def test_criterion_1_split_statistics_match_reference(self, real_splits):
        stats = {name: corpus_stats(real_splits[name])
                 for name in ("train", "dev", "test")}
        for name, s in stats.items():
            assert s.n_dialogues == REFERENCE_N_DIALOGUES[name], name
            assert s.n_user_turns == REFERENCE_N_USER_TURNS[name], name
            assert s.median_user_turn_tokens == REFERENCE_MEDIAN_TURN_TOKENS, \
                name
            ref_with = REFERENCE_VOCAB_WITH_NUMERIC[name]
            ref_without = REFERENCE_VOCAB_WITHOUT_NUMERIC[name]
            assert abs(s.user_vocab_with_numeric - ref_with) \
                <= 0.05 * ref_with, name
            assert abs(s.user_vocab_without_numeric - ref_without) \
                <= 0.05 * ref_without, name
        _verdict(1, "PASS",
                 "dialogue/turn counts and medians exact; vocabularies "
                 "within 5% ("
                 + ", ".join(f"{n}={stats[n].user_vocab_with_numeric}"
                             for n in ("train", "dev", "test")) + ")")


class TestCriterion2SlotStatistics:
    def test_criterion_2_slot_stats_and_unreachable_rates(self, real_splits):
        train, dev = real_splits["train"], real_splits["dev"]
        ontology = build_ontology(train)
        slots = slot_stats(train, dev, ontology)
        vocab_misses, none_misses = [], []
        for key, (ref_vocab, ref_none) in REFERENCE_SLOT_STATS.items():
            if abs(slots[key].vocab_size - ref_vocab) > 2:
                vocab_misses.append(
                    f"{key}: {slots[key].vocab_size} vs {ref_vocab}")
            if abs(slots[key].pct_none - ref_none) > 0.5:
                none_misses.append(
                    f"{key}: {slots[key].pct_none:.2f} vs {ref_none}")
        assert not vocab_misses, vocab_misses
        assert not none_misses, none_misses
        report = reachability_report(dev, global_value_set(train), ontology)
        assert abs(report.ov_unreachable_pct
                   - REFERENCE_OV_UNREACHABLE_PCT) <= 2.0
        assert abs(report.jst_unreachable_pct
                   - REFERENCE_JST_UNREACHABLE_PCT) <= 2.0
        _verdict(2, "PASS",
                 f"all 37 slots within tolerance; dev unreachable "
                 f"OV {report.ov_unreachable_pct:.2f}% / "
                 f"JST {report.jst_unreachable_pct:.2f}%")


class TestCriterion3MajorityBaseline:
    def test_criterion_3_majority_baseline_band(self, real_splits):
        test = real_splits["test"]
        acc = joint_goal_accuracy(majority_predictions(test), test) * 100.0
        assert abs(acc - REFERENCE_MAJORITY_PCT) <= 0.3
        _verdict(3, "PASS",
                 f"all-unset baseline {acc:.2f}% joint goal accuracy "
                 f"on test (band 1.5 +/- 0.3)")


MAX_NGRAM = 6


def _training_property_battery(train, dev, jst_epochs):
    """The four learning-dynamics checks shared by criterion 4's real and
    synthetic variants.  Raises AssertionError with a named sub-property
    when one fails."""
    enc = EncoderConfig.desk_scale()
    _, ov_result = train_ov(
        train, dev, enc,
        TrainConfig(learning_rate=0.005, batch_size=16, epochs=3, seed=17),
        max_ngram=MAX_NGRAM)
    ov_losses = [e.train_loss for e in ov_result.trace[:3]]
    assert ov_losses[0] > ov_losses[1] > ov_losses[2], \
        f"(a) OV train loss not strictly decreasing: {ov_losses}"

    jst_tracker, jst_result = train_jst(
        train, dev, enc,
        TrainConfig(learning_rate=0.005, batch_size=16, epochs=jst_epochs,
                    seed=17))
    jst_losses = [e.train_loss for e in jst_result.trace[:3]]
    assert jst_losses[0] > jst_losses[1] > jst_losses[2], \
        f"(a) JST train loss not strictly decreasing: {jst_losses}"

    jst_preds = jst_tracker.track_corpus(dev)
    jst_acc = joint_goal_accuracy(jst_preds, dev)
    majority_acc = joint_goal_accuracy(majority_predictions(dev), dev)
    assert jst_acc > majority_acc, \
        f"(b) JST dev accuracy {jst_acc:.4f} <= majority {majority_acc:.4f}"

    # (c) uses the oracle-scored open-vocabulary predictions as the second
    # method; the identity is about stitching, not tracker quality.
    values = global_value_set(train)
    ov_preds = oracle_track_corpus(dev, values, MAX_NGRAM)
    jst_slot = per_slot_accuracy(jst_preds, dev)
    ov_slot = per_slot_accuracy(ov_preds, dev)
    assignment = select_methods(jst_slot, ov_slot)
    combined = combine({METHOD_JST: jst_preds, METHOD_OVST: ov_preds},
                       assignment)
    rescored = per_slot_accuracy(combined, dev)
    for key in SLOT_KEYS:
        assert rescored[key] == max(jst_slot[key], ov_slot[key]), \
            f"(c) hybrid dev accuracy on {key} is not the per-slot max"

    report = reachability_report(dev, values, build_ontology(train),
                                 MAX_NGRAM)
    oracle_acc = joint_goal_accuracy(ov_preds, dev)
    assert oracle_acc == pytest.approx(report.ov_ceiling_pct / 100.0,
                                       abs=1e-12), \
        "(d) oracle-scored tracking does not meet the reachability ceiling"
    return jst_acc, majority_acc, oracle_acc


class TestCriterion4TrainingProperties:
    def test_criterion_4_desk_scale_training_properties(self, learn_root):
        data_root = os.environ.get("HYST_DATA")
        if data_root and (Path(data_root) / "data.json").exists():
            splits = load_all_splits(data_root)
            train = subsample(splits["train"], 0.10)
            dev = subsample(splits["dev"], 0.10)
            source = "10% subsample of the real corpus"
            jst_epochs = 30
        else:
            splits = load_all_splits(learn_root)
            train, dev = splits["train"], splits["dev"]
            source = "synthetic corpus (set HYST_DATA for the real one)"
            jst_epochs = 60
        jst_acc, majority_acc, oracle_acc = _training_property_battery(
            train, dev, jst_epochs)
        _verdict(4, "PASS",
                 f"loss decreases, JST dev {jst_acc:.4f} > majority "
                 f"{majority_acc:.4f}, hybrid per-slot max exact, oracle "
                 f"ceiling {oracle_acc:.4f} exact, on {source}")


INVARIANT_SUITE = (
    "tests/test_candidates.py::TestCandidateSets::"
    "test_matches_bruteforce_on_short_dialogues",
    "tests/test_encoders.py::TestGradients::test_context_encoder_gradient",
    "tests/test_ov_tracker.py::TestGradients::"
    "test_ov_gradient_matches_finite_differences",
    "tests/test_jst_tracker.py::TestGradients::"
    "test_jst_gradient_matches_finite_differences",
    "tests/test_encoders.py::TestBatchingEquivalence::"
    "test_clipping_equals_manual_truncation",
    "tests/test_hybrid.py::TestEnsembleVote::test_permutation_invariant",
    "tests/test_hybrid.py::TestEnsembleVote::"
    "test_single_slot_vote_matches_counter_spec",
    "tests/test_evaluator.py::TestJointGoalAccuracy::"
    "test_subset_accuracy_dominates_superset",
)


class TestCriterion5InvariantSuites:
    def test_criterion_5_invariant_suites(self):
        """Re-runs the property suites in a child pytest so this battery
        reports on them even when invoked on its own."""
        proc = subprocess.run(
            [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
             *INVARIANT_SUITE],
            cwd=Path(__file__).resolve().parent.parent,
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stdout + proc.stderr
        _verdict(5, "PASS",
                 f"{len(INVARIANT_SUITE)} invariant suites green "
                 "(candidate brute-force, gradient checks, clipping, vote "
                 "permutation, subset monotonicity)")


class TestCriterion6FullScale:
    def test_criterion_6_full_scale_reproduction(self, real_root,
                                                 tmp_path_factory):
        if os.environ.get("HYST_FULL_EVAL") != "1":
            _verdict(6, "SKIP",
                     "full-scale reproduction takes hours; set "
                     "HYST_FULL_EVAL=1 to enable")
            pytest.skip("HYST_FULL_EVAL not set; full-scale training is "
                        "opt-in (hours of compute)")
        from hyst.cli import main as cli_main

        workdir = os.environ.get("HYST_FULL_WORKDIR") or str(
            tmp_path_factory.mktemp("full-eval"))
        summary_path = Path(workdir) / "summary.json"
        if not summary_path.exists():
            rc = cli_main(["reproduce", "--data", str(real_root),
                           "--workdir", workdir])
            assert rc == 0
        summary = json.loads(summary_path.read_text(encoding="utf-8"))
        got = {
            ("ov", "single"): summary["methods"]["ov"]["test"] * 100,
            ("jst", "single"): summary["methods"]["jst"]["test"] * 100,
            ("ov", "ensemble"): summary["methods"]["ov_ensemble"]["test"] * 100,
            ("jst", "ensemble"):
                summary["methods"]["jst_ensemble"]["test"] * 100,
            ("hyst", "ensemble"): summary["methods"]["hyst"]["test"] * 100,
        }
        expected = {
            ("ov", "single"): REFERENCE_SINGLE_PCT["ov"],
            ("jst", "single"): REFERENCE_SINGLE_PCT["jst"],
            ("ov", "ensemble"): REFERENCE_ENSEMBLE_PCT["ov"],
            ("jst", "ensemble"): REFERENCE_ENSEMBLE_PCT["jst"],
            ("hyst", "ensemble"): REFERENCE_ENSEMBLE_PCT["hyst"],
        }
        misses = [f"{k}: {got[k]:.2f} vs {expected[k]} +/- {FULL_SCALE_BAND}"
                  for k in expected
                  if abs(got[k] - expected[k]) > FULL_SCALE_BAND]
        assert not misses, misses
        _verdict(6, "PASS", "full-scale accuracies within the target band: "
                 + ", ".join(f"{m}-{kind} {got[(m, kind)]:.2f}%"
                             for m, kind in got))
