"""Joint tracker over fixed per-slot vocabularies.

One softmax head per slot reads the dialogue-level encoding of the user
utterance history and distributes probability over that slot's
training-observed values (plus unset and dontcare).  All heads share the
encoder, so every slot is predicted jointly from the same context.  Values
never seen in training are folded into a trailing catch-all bucket that only
participates in the training loss; at prediction time the distribution is
renormalized over the known vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .corpus import SLOT_KEYS, Dialogue, Ontology
from .encoders import (
    EncoderConfig,
    TrainConfig,
    Vocab,
    ContextEncoder,
    DialogueTensors,
    TrainResult,
    load_checkpoint,
    save_checkpoint,
    seed_everything,
    tensorize_dialogue,
    token_vocab_from_corpus,
    train_model,
)


class JSTModel(nn.Module):
    """Shared utterance/dialogue encoders plus a softmax head per slot.

    Head k emits |V_k| + 1 logits: one per vocabulary entry and a final
    catch-all for values outside the training vocabulary.
    """

    def __init__(self, n_tokens: int, config: EncoderConfig, ontology: Ontology):
        super().__init__()
        self.config = config
        self.ctx = ContextEncoder(n_tokens, n_acts=0, config=config, use_acts=False)
        self.heads = nn.ModuleList([
            nn.Linear(config.dialogue_hidden_dim, len(ontology.vocab[key]) + 1)
            for key in SLOT_KEYS
        ])

    def logits(self, z: torch.Tensor) -> list[torch.Tensor]:
        """Per-slot logits from dialogue encodings: [T, Hd] -> S x [T, |V_k|+1]."""
        z = self.ctx.drop(z)
        return [head(z) for head in self.heads]


def jst_loss(distributions: list[np.ndarray], gold_indices: list[int]) -> float:
    """Summed negative log-probability of the gold index per slot.

    `distributions[k]` is slot k's probability vector for one turn and
    `gold_indices[k]` the position of the gold value in it.
    """
    total = 0.0
    for dist, gold in zip(distributions, gold_indices):
        total -= float(np.log(dist[gold]))
    return total


def jst_predict(distribution: np.ndarray, vocab: tuple[str, ...]) -> str:
    """Highest-probability value; the first maximum wins ties.

    The vocabulary starts with the unset marker then dontcare, so a fully
    uniform distribution predicts unset.
    """
    if len(distribution) != len(vocab):
        raise ValueError(
            f"distribution has {len(distribution)} entries for {len(vocab)} values")
    return vocab[int(np.argmax(distribution))]


# --- training examples -----------------------------------------------------------


@dataclass
class JSTDialogueExample:
    """One dialogue's tensors plus per-turn gold vocabulary indices."""

    tensors: DialogueTensors
    gold: torch.Tensor  # [N, S] long; |V_k| marks out-of-vocabulary gold

    @property
    def n_turns(self) -> int:
        return self.tensors.n_turns


def build_jst_examples(dialogues: list[Dialogue], token_vocab: Vocab,
                       ontology: Ontology,
                       config: EncoderConfig) -> list[JSTDialogueExample]:
    index = {key: {v: i for i, v in enumerate(ontology.vocab[key])}
             for key in SLOT_KEYS}
    examples = []
    for dialogue in dialogues:
        tensors = tensorize_dialogue(dialogue, token_vocab, None, config)
        gold = torch.zeros(tensors.n_turns, len(SLOT_KEYS), dtype=torch.long)
        for j, turn in enumerate(dialogue.user_turns):
            for k, key in enumerate(SLOT_KEYS):
                value = turn.gold_state[key]
                gold[j, k] = index[key].get(value, len(ontology.vocab[key]))
        examples.append(JSTDialogueExample(tensors=tensors, gold=gold))
    return examples


def jst_batch_loss(model: JSTModel, batch: list[JSTDialogueExample]):
    """Summed cross-entropy over every (turn, slot) of the batch."""
    contexts = model.ctx.encode_contexts([ex.tensors for ex in batch])
    z = torch.cat([ctx.Z for ctx in contexts], dim=0)
    gold = torch.cat([ex.gold for ex in batch], dim=0)
    loss = z.new_zeros(())
    for k, logits in enumerate(model.logits(z)):
        loss = loss + nn.functional.cross_entropy(logits, gold[:, k],
                                                  reduction="sum")
    return loss, gold.numel()


# --- the assembled tracker ---------------------------------------------------------


@dataclass
class JSTTracker:
    model: JSTModel
    token_vocab: Vocab
    ontology: Ontology
    config: EncoderConfig

    def distributions(self, dialogue: Dialogue) -> list[list[np.ndarray]]:
        """Per turn, per slot: probabilities over that slot's vocabulary.

        The catch-all logit is dropped and the remaining softmax mass is
        renormalized, so each returned vector sums to 1 over known values.
        """
        tensors = tensorize_dialogue(dialogue, self.token_vocab, None, self.config)
        self.model.eval()
        with torch.no_grad():
            ctx = self.model.ctx.encode_contexts([tensors])[0]
            all_logits = self.model.logits(ctx.Z)
        turns = []
        for j in range(tensors.n_turns):
            per_slot = []
            for logits in all_logits:
                probs = torch.softmax(logits[j], dim=-1).numpy().astype(np.float64)
                known = probs[:-1]
                per_slot.append(known / known.sum())
            turns.append(per_slot)
        return turns

    def track(self, dialogue: Dialogue) -> list[dict[str, str]]:
        """Predicted full state after each user turn (no carry-over: every
        slot is re-predicted from the history each turn)."""
        states = []
        for per_slot in self.distributions(dialogue):
            state = {}
            for key, dist in zip(SLOT_KEYS, per_slot):
                state[key] = jst_predict(dist, self.ontology.vocab[key])
            states.append(state)
        return states

    def track_corpus(self, dialogues: list[Dialogue]) -> dict:
        preds = {}
        for dialogue in dialogues:
            for i, state in enumerate(self.track(dialogue), start=1):
                preds[(dialogue.id, i)] = state
        return preds


def train_jst(train: list[Dialogue], dev: list[Dialogue],
              encoder_config: EncoderConfig | None = None,
              train_config: TrainConfig | None = None,
              ontology: Ontology | None = None) -> tuple[JSTTracker, TrainResult]:
    """Train a joint fixed-vocabulary tracker from scratch on a corpus."""
    from .corpus import build_ontology

    encoder_config = encoder_config or EncoderConfig.jst_default()
    train_config = train_config or TrainConfig()
    seed_everything(train_config.seed)
    token_vocab = token_vocab_from_corpus(train)
    ontology = ontology or build_ontology(train)
    model = JSTModel(len(token_vocab), encoder_config, ontology)
    train_examples = build_jst_examples(train, token_vocab, ontology, encoder_config)
    dev_examples = build_jst_examples(dev, token_vocab, ontology, encoder_config)
    result = train_model(model, train_examples, dev_examples, train_config,
                         jst_batch_loss)
    tracker = JSTTracker(model=model, token_vocab=token_vocab,
                         ontology=ontology, config=encoder_config)
    return tracker, result


# --- checkpointing -----------------------------------------------------------------


def save_jst_tracker(path, tracker: JSTTracker, train_config: TrainConfig,
                     extra: dict | None = None) -> None:
    from dataclasses import asdict

    save_checkpoint(path, {
        "kind": "jst",
        "model_state": tracker.model.state_dict(),
        "encoder_config": asdict(tracker.config),
        "train_config": asdict(train_config),
        "token_vocab": tracker.token_vocab.itos,
        "ontology": tracker.ontology.to_dict(),
        "extra": extra or {},
    })


def load_jst_tracker(path) -> JSTTracker:
    payload = load_checkpoint(path)
    if payload.get("kind") != "jst":
        raise ValueError(f"{path} is not a joint-tracker checkpoint")
    config = EncoderConfig(**payload["encoder_config"])
    token_vocab = Vocab.from_itos(payload["token_vocab"])
    ontology = Ontology.from_dict(payload["ontology"])
    model = JSTModel(len(token_vocab), config, ontology)
    model.load_state_dict(payload["model_state"])
    return JSTTracker(model=model, token_vocab=token_vocab,
                      ontology=ontology, config=config)
