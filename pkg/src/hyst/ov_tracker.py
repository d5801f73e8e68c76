"""Open-vocabulary tracker: score (candidate, slot) pairs against turn context.

Each slot owns a small feed-forward head that reads the candidate embedding
(mean of its token embeddings, shared with the sentence encoder's input
layer) concatenated with the turn context [E;Z;A], and emits an independent
probability through a sigmoid.  Tracking folds per-turn decisions into a
running state: a slot is rewritten by the highest-scoring candidate at or
above the decision threshold, otherwise it keeps its previous value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .candidates import (
    DEFAULT_MAX_NGRAM,
    CandidateSet,
    candidate_sets_for_dialogue,
    label_candidates,
)
from .corpus import NONE_VALUE, SLOT_KEYS, Dialogue, empty_state
from .encoders import (
    EncoderConfig,
    TrainConfig,
    Vocab,
    ContextEncoder,
    DialogueTensors,
    TrainResult,
    act_vocab_from_corpus,
    load_checkpoint,
    save_checkpoint,
    seed_everything,
    tensorize_dialogue,
    token_vocab_from_corpus,
    train_model,
)

PROB_EPS = 1e-7
DEFAULT_THRESHOLD = 0.5


class OVModel(nn.Module):
    """Shared context encoders plus one binary head per slot."""

    def __init__(self, n_tokens: int, n_acts: int, config: EncoderConfig,
                 n_slots: int = len(SLOT_KEYS)):
        super().__init__()
        self.config = config
        self.n_slots = n_slots
        self.ctx = ContextEncoder(n_tokens, n_acts, config, use_acts=True)
        in_dim = config.token_embed_dim + config.context_dim
        hidden = config.context_ff_dim
        bound1 = 1.0 / math.sqrt(in_dim)
        bound2 = 1.0 / math.sqrt(hidden)
        self.head_w1 = nn.Parameter(
            torch.empty(n_slots, in_dim, hidden).uniform_(-bound1, bound1))
        self.head_b1 = nn.Parameter(
            torch.empty(n_slots, hidden).uniform_(-bound1, bound1))
        self.head_w2 = nn.Parameter(
            torch.empty(n_slots, hidden).uniform_(-bound2, bound2))
        self.head_b2 = nn.Parameter(
            torch.empty(n_slots).uniform_(-bound2, bound2))

    def candidate_embeddings(self, cand_ids: torch.Tensor,
                             cand_lens: torch.Tensor) -> torch.Tensor:
        """Mean token embedding per candidate: [T, C, L] ids -> [T, C, D]."""
        emb = self.ctx.token_emb(cand_ids)
        mask = (torch.arange(cand_ids.size(-1))
                .view(1, 1, -1) < cand_lens.unsqueeze(-1))
        summed = (emb * mask.unsqueeze(-1)).sum(dim=2)
        return summed / cand_lens.clamp(min=1).unsqueeze(-1)

    def score(self, cand_emb: torch.Tensor, f_context: torch.Tensor) -> torch.Tensor:
        """Per-slot probabilities: [T, C, D] x [T, F] -> [T, C, S] in (0, 1)."""
        n_cands = cand_emb.size(1)
        ctx = f_context.unsqueeze(1).expand(-1, n_cands, -1)
        x = torch.cat([cand_emb, ctx], dim=-1)
        hidden = torch.tanh(torch.einsum("tci,sih->tcsh", x, self.head_w1)
                            + self.head_b1)
        hidden = self.ctx.drop(hidden)
        logits = torch.einsum("tcsh,sh->tcs", hidden, self.head_w2) + self.head_b2
        return torch.sigmoid(logits)


def ov_loss(scores, labels, mask=None):
    """Summed negative binary log-likelihood over (turn, candidate, slot).

    Probabilities are clamped to [eps, 1-eps] so a confidently wrong score
    stays finite.  Accepts tensors (returns a tensor, differentiable) or any
    array-likes (returns a float).
    """
    tensor_in = isinstance(scores, torch.Tensor)
    probs = scores if tensor_in else torch.tensor(np.asarray(scores, dtype=np.float64))
    target = labels if isinstance(labels, torch.Tensor) else torch.tensor(
        np.asarray(labels, dtype=np.float64))
    probs = probs.clamp(PROB_EPS, 1.0 - PROB_EPS)
    target = target.to(probs.dtype)
    nll = -(target * probs.log() + (1.0 - target) * (1.0 - probs).log())
    if mask is not None:
        nll = nll * mask.to(nll.dtype)
    total = nll.sum()
    return total if tensor_in else float(total)


@dataclass
class ScoredCandidates:
    """Scores for one turn: probs[j, k] is P(candidate j fills slot k)."""

    candidates: tuple[str, ...]
    probs: np.ndarray  # [n_candidates, n_slots]

    def pairs(self, slot_key: str) -> list[tuple[str, float]]:
        k = SLOT_KEYS.index(slot_key)
        return [(c, float(p)) for c, p in zip(self.candidates, self.probs[:, k])]


def ov_update_state(prev: dict[str, str], scored: ScoredCandidates,
                    threshold: float = DEFAULT_THRESHOLD) -> dict[str, str]:
    """One tracking step.

    Per slot: among candidates scoring at or above the threshold, take the
    highest-scoring one (earliest candidate wins ties); with no candidate
    above threshold the slot keeps its previous value.
    """
    state = dict(prev)
    for k, key in enumerate(SLOT_KEYS):
        column = scored.probs[:, k]
        best_j = -1
        best_p = -1.0
        for j, p in enumerate(column):
            if p >= threshold and p > best_p:
                best_j, best_p = j, float(p)
        if best_j >= 0:
            state[key] = scored.candidates[best_j]
    return state


def fold_states(scored_turns: list[ScoredCandidates],
                threshold: float = DEFAULT_THRESHOLD) -> list[dict[str, str]]:
    """Roll per-turn scores into the running state, starting all-unset."""
    states = []
    state = empty_state()
    for scored in scored_turns:
        state = ov_update_state(state, scored, threshold)
        states.append(state)
    return states


def oracle_scores(dialogue: Dialogue, values: set[str],
                  max_n: int = DEFAULT_MAX_NGRAM) -> list[ScoredCandidates]:
    """Perfect scorer: probability 1 exactly on gold (candidate, slot) pairs.

    Tracking these scores realizes the reachability ceiling: the only errors
    left are values missing from the candidate set.
    """
    scored = []
    cand_sets = candidate_sets_for_dialogue(dialogue, values, max_n)
    for turn, cands in zip(dialogue.user_turns, cand_sets):
        labels = label_candidates(cands, turn.gold_state).astype(np.float64)
        scored.append(ScoredCandidates(cands.candidates, labels))
    return scored


# --- training examples -----------------------------------------------------------


@dataclass
class OVDialogueExample:
    """One dialogue's tensors plus per-turn candidates and labels."""

    tensors: DialogueTensors
    cand_ids: torch.Tensor    # [N, C, L] token ids, PAD-filled
    cand_lens: torch.Tensor   # [N, C]
    cand_mask: torch.Tensor   # [N, C] True for real candidates
    labels: torch.Tensor      # [N, C, S] float

    @property
    def n_turns(self) -> int:
        return self.tensors.n_turns


def _tensorize_candidates(cand_sets: list[CandidateSet], token_vocab: Vocab):
    n = len(cand_sets)
    c_max = max(len(cs.candidates) for cs in cand_sets)
    token_lists = [[token_vocab.ids(c.split(" ")) for c in cs.candidates]
                   for cs in cand_sets]
    l_max = max(len(ids) for turn in token_lists for ids in turn)
    cand_ids = torch.zeros(n, c_max, l_max, dtype=torch.long)
    cand_lens = torch.zeros(n, c_max, dtype=torch.long)
    cand_mask = torch.zeros(n, c_max, dtype=torch.bool)
    for j, turn in enumerate(token_lists):
        for c, ids in enumerate(turn):
            cand_ids[j, c, : len(ids)] = torch.tensor(ids)
            cand_lens[j, c] = len(ids)
            cand_mask[j, c] = True
    return cand_ids, cand_lens, cand_mask


def build_ov_examples(dialogues: list[Dialogue], values: set[str],
                      token_vocab: Vocab, act_vocab: Vocab,
                      config: EncoderConfig,
                      max_n: int = DEFAULT_MAX_NGRAM) -> list[OVDialogueExample]:
    """Candidate sets, labels, and id tensors for every dialogue."""
    examples = []
    for dialogue in dialogues:
        cand_sets = candidate_sets_for_dialogue(dialogue, values, max_n)
        cand_ids, cand_lens, cand_mask = _tensorize_candidates(cand_sets, token_vocab)
        n, c_max = cand_mask.shape
        labels = torch.zeros(n, c_max, len(SLOT_KEYS))
        for j, (turn, cands) in enumerate(zip(dialogue.user_turns, cand_sets)):
            turn_labels = label_candidates(cands, turn.gold_state)
            labels[j, : turn_labels.shape[0]] = torch.tensor(
                turn_labels, dtype=torch.float32)
        examples.append(OVDialogueExample(
            tensors=tensorize_dialogue(dialogue, token_vocab, act_vocab, config),
            cand_ids=cand_ids, cand_lens=cand_lens, cand_mask=cand_mask,
            labels=labels))
    return examples


def ov_batch_loss(model: OVModel, batch: list[OVDialogueExample]):
    """Summed clamped-BCE over every (turn, candidate, slot) of the batch."""
    contexts = model.ctx.encode_contexts([ex.tensors for ex in batch])
    f_ctx = torch.cat([ctx.f_context for ctx in contexts], dim=0)
    c_max = max(ex.cand_ids.size(1) for ex in batch)
    l_max = max(ex.cand_ids.size(2) for ex in batch)
    ids, lens, mask, labels = [], [], [], []
    for ex in batch:
        n = ex.n_turns
        pad_c = c_max - ex.cand_ids.size(1)
        pad_l = l_max - ex.cand_ids.size(2)
        ids.append(nn.functional.pad(ex.cand_ids, (0, pad_l, 0, pad_c)))
        lens.append(nn.functional.pad(ex.cand_lens, (0, pad_c)))
        mask.append(nn.functional.pad(ex.cand_mask, (0, pad_c)))
        labels.append(nn.functional.pad(ex.labels, (0, 0, 0, pad_c)))
        assert ids[-1].size(0) == n
    cand_ids = torch.cat(ids, dim=0)
    cand_lens = torch.cat(lens, dim=0)
    cand_mask = torch.cat(mask, dim=0)
    target = torch.cat(labels, dim=0)
    cand_emb = model.candidate_embeddings(cand_ids, cand_lens)
    probs = model.score(cand_emb, f_ctx)
    pair_mask = cand_mask.unsqueeze(-1).expand_as(probs)
    loss = ov_loss(probs, target, mask=pair_mask)
    return loss, int(pair_mask.sum())


# --- the assembled tracker ---------------------------------------------------------


@dataclass
class OVTracker:
    model: OVModel
    token_vocab: Vocab
    act_vocab: Vocab
    config: EncoderConfig
    values: frozenset[str]
    max_ngram: int = DEFAULT_MAX_NGRAM
    threshold: float = DEFAULT_THRESHOLD

    def score_turns(self, dialogue: Dialogue) -> list[ScoredCandidates]:
        """Score every user turn's candidate set in one encoder pass."""
        cand_sets = candidate_sets_for_dialogue(dialogue, self.values, self.max_ngram)
        tensors = tensorize_dialogue(dialogue, self.token_vocab, self.act_vocab,
                                     self.config)
        self.model.eval()
        with torch.no_grad():
            ctx = self.model.ctx.encode_contexts([tensors])[0]
            cand_ids, cand_lens, cand_mask = _tensorize_candidates(
                cand_sets, self.token_vocab)
            cand_emb = self.model.candidate_embeddings(cand_ids, cand_lens)
            probs = self.model.score(cand_emb, ctx.f_context)
        scored = []
        for j, cands in enumerate(cand_sets):
            c = len(cands.candidates)
            scored.append(ScoredCandidates(
                cands.candidates, probs[j, :c].numpy().astype(np.float64)))
        return scored

    def track(self, dialogue: Dialogue) -> list[dict[str, str]]:
        """Predicted cumulative state after each user turn."""
        return fold_states(self.score_turns(dialogue), self.threshold)

    def track_corpus(self, dialogues: list[Dialogue]) -> dict:
        preds = {}
        for dialogue in dialogues:
            for i, state in enumerate(self.track(dialogue), start=1):
                preds[(dialogue.id, i)] = state
        return preds


def oracle_track(dialogue: Dialogue, values: set[str],
                 max_n: int = DEFAULT_MAX_NGRAM,
                 threshold: float = DEFAULT_THRESHOLD) -> list[dict[str, str]]:
    return fold_states(oracle_scores(dialogue, values, max_n), threshold)


def oracle_track_corpus(dialogues: list[Dialogue], values: set[str],
                        max_n: int = DEFAULT_MAX_NGRAM) -> dict:
    preds = {}
    for dialogue in dialogues:
        for i, state in enumerate(oracle_track(dialogue, values, max_n), start=1):
            preds[(dialogue.id, i)] = state
    return preds


def train_ov(train: list[Dialogue], dev: list[Dialogue],
             encoder_config: EncoderConfig | None = None,
             train_config: TrainConfig | None = None,
             max_ngram: int = DEFAULT_MAX_NGRAM,
             threshold: float = DEFAULT_THRESHOLD) -> tuple[OVTracker, TrainResult]:
    """Train an open-vocabulary tracker from scratch on a corpus.

    Seeds everything from the train config before the model is built, so a
    fixed seed gives identical initialization, batching, and loss traces.
    """
    from .candidates import global_value_set

    encoder_config = encoder_config or EncoderConfig.ov_default()
    train_config = train_config or TrainConfig()
    seed_everything(train_config.seed)
    token_vocab = token_vocab_from_corpus(train)
    act_vocab = act_vocab_from_corpus(train)
    values = frozenset(global_value_set(train))
    model = OVModel(len(token_vocab), len(act_vocab), encoder_config)
    train_examples = build_ov_examples(train, values, token_vocab, act_vocab,
                                       encoder_config, max_ngram)
    dev_examples = build_ov_examples(dev, values, token_vocab, act_vocab,
                                     encoder_config, max_ngram)
    result = train_model(model, train_examples, dev_examples, train_config,
                         ov_batch_loss)
    tracker = OVTracker(model=model, token_vocab=token_vocab, act_vocab=act_vocab,
                        config=encoder_config, values=values,
                        max_ngram=max_ngram, threshold=threshold)
    return tracker, result


# --- checkpointing -----------------------------------------------------------------


def save_ov_tracker(path, tracker: OVTracker, train_config: TrainConfig,
                    extra: dict | None = None) -> None:
    from dataclasses import asdict

    save_checkpoint(path, {
        "kind": "ov",
        "model_state": tracker.model.state_dict(),
        "encoder_config": asdict(tracker.config),
        "train_config": asdict(train_config),
        "token_vocab": tracker.token_vocab.itos,
        "act_vocab": tracker.act_vocab.itos,
        "values": sorted(tracker.values),
        "max_ngram": tracker.max_ngram,
        "threshold": tracker.threshold,
        "extra": extra or {},
    })


def load_ov_tracker(path) -> OVTracker:
    payload = load_checkpoint(path)
    if payload.get("kind") != "ov":
        raise ValueError(f"{path} is not an open-vocabulary tracker checkpoint")
    config = EncoderConfig(**payload["encoder_config"])
    token_vocab = Vocab.from_itos(payload["token_vocab"])
    act_vocab = Vocab.from_itos(payload["act_vocab"])
    model = OVModel(len(token_vocab), len(act_vocab), config)
    model.load_state_dict(payload["model_state"])
    return OVTracker(model=model, token_vocab=token_vocab, act_vocab=act_vocab,
                     config=config, values=frozenset(payload["values"]),
                     max_ngram=int(payload["max_ngram"]),
                     threshold=float(payload["threshold"]))
