"""Dialogue state tracking over MultiWOZ-2.0-format corpora.

Three trackers over the same 37-slot schema: a joint tracker with one
softmax per slot over its training-observed values, an open-vocabulary
tracker that scores text spans from the dialogue itself, and a hybrid that
picks the better of the two per slot on held-out data.
"""

from .candidates import (
    DEFAULT_MAX_NGRAM,
    SENTINEL_CANDIDATES,
    CandidateSet,
    ReachabilityReport,
    build_candidate_set,
    candidate_sets_for_dialogue,
    extract_ngrams,
    global_value_set,
    label_candidates,
    reachability_report,
)
from .corpus import (
    DOMAIN_SLOTS,
    DOMAINS,
    DONTCARE_VALUE,
    NONE_VALUE,
    SLOT_KEYS,
    CorpusError,
    CorpusStats,
    Dialogue,
    Ontology,
    SlotKey,
    Turn,
    build_ontology,
    corpus_stats,
    empty_state,
    load_all_splits,
    load_corpus,
    load_corpus_jsonl,
    normalize_value,
    save_corpus_jsonl,
    slot_stats,
    subsample,
    tokenize,
)
from .encoders import (
    ContextEncoder,
    EncoderConfig,
    TrainConfig,
    Vocab,
    seed_everything,
    train_model,
)
from .evaluator import (
    EvalReport,
    emit_report,
    evaluate,
    joint_goal_accuracy,
)
from .hybrid import (
    METHOD_JST,
    METHOD_OVST,
    combine,
    ensemble_vote,
    per_slot_accuracy,
    select_methods,
)
from .jst_tracker import (
    JSTModel,
    JSTTracker,
    jst_loss,
    jst_predict,
    load_jst_tracker,
    save_jst_tracker,
    train_jst,
)
from .ov_tracker import (
    OVModel,
    OVTracker,
    ScoredCandidates,
    load_ov_tracker,
    oracle_track,
    oracle_track_corpus,
    ov_loss,
    ov_update_state,
    save_ov_tracker,
    train_ov,
)
from .predictions import (
    AlignmentError,
    Predictions,
    gold_predictions,
    load_predictions_jsonl,
    majority_predictions,
    save_predictions_jsonl,
)
from .toydata import ToyDataConfig, write_toy_corpus

__version__ = "0.1.0"
