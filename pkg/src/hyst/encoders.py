"""Shared neural machinery for both trackers.

Three recurrent encoders supply the per-turn context: a bidirectional LSTM
over the current user utterance (E), a unidirectional LSTM over the sequence
of user-utterance encodings (Z), and a unidirectional LSTM over the agent
dialogue-act labels seen so far (A).  Utterances are clipped to a fixed token
budget and the dialogue history to a fixed window of most recent turns.

Also here: vocabularies, seeding, the generic epoch loop with best-checkpoint
selection by dev loss, and checkpoint/loss-trace persistence.
"""

from __future__ import annotations

import copy
import csv
import math
import random
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
import torch
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from .corpus import Dialogue

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_ID = 0
UNK_ID = 1


class Vocab:
    """String-to-id table with reserved padding and unknown entries."""

    def __init__(self, tokens: Iterable[str] = ()):
        self.itos = [PAD_TOKEN, UNK_TOKEN] + sorted(set(tokens) - {PAD_TOKEN, UNK_TOKEN})
        self.stoi = {token: i for i, token in enumerate(self.itos)}

    @classmethod
    def from_itos(cls, itos: Sequence[str]) -> "Vocab":
        vocab = cls()
        vocab.itos = list(itos)
        vocab.stoi = {token: i for i, token in enumerate(vocab.itos)}
        return vocab

    def ids(self, tokens: Iterable[str]) -> list[int]:
        return [self.stoi.get(token, UNK_ID) for token in tokens]

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi


def token_vocab_from_corpus(train: list[Dialogue]) -> Vocab:
    """Token table over training user utterances and training slot values."""
    tokens: set[str] = set()
    for dialogue in train:
        for turn in dialogue.user_turns:
            tokens.update(turn.tokens)
            for value in turn.gold_state.values():
                tokens.update(value.split(" "))
    return Vocab(tokens)


def act_vocab_from_corpus(train: list[Dialogue]) -> Vocab:
    labels: set[str] = set()
    for dialogue in train:
        for turn in dialogue.turns:
            if turn.speaker == "agent":
                labels.update(turn.acts)
    return Vocab(labels)


@dataclass
class EncoderConfig:
    token_embed_dim: int = 300
    utterance_hidden_dim: int = 256
    dialogue_hidden_dim: int = 512
    act_embed_dim: int = 50
    act_hidden_dim: int = 64
    context_ff_dim: int = 256
    max_turn_tokens: int = 30
    max_history_turns: int = 30
    dropout: float = 0.0

    def __post_init__(self):
        for name in ("token_embed_dim", "utterance_hidden_dim", "dialogue_hidden_dim",
                     "act_embed_dim", "act_hidden_dim", "context_ff_dim",
                     "max_turn_tokens", "max_history_turns"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @property
    def utterance_dim(self) -> int:
        return 2 * self.utterance_hidden_dim

    @property
    def context_dim(self) -> int:
        """dim of [E;Z;A]."""
        return self.utterance_dim + self.dialogue_hidden_dim + self.act_hidden_dim

    @classmethod
    def ov_default(cls) -> "EncoderConfig":
        return cls()

    @classmethod
    def jst_default(cls) -> "EncoderConfig":
        return cls(token_embed_dim=300, utterance_hidden_dim=200,
                   dialogue_hidden_dim=150)

    @classmethod
    def desk_scale(cls) -> "EncoderConfig":
        """Tiny dims for CI-speed training runs."""
        return cls(token_embed_dim=48, utterance_hidden_dim=24,
                   dialogue_hidden_dim=32, act_embed_dim=8, act_hidden_dim=8,
                   context_ff_dim=32)


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 128
    epochs: int = 20
    seed: int = 13

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % (2 ** 32))
    torch.manual_seed(seed)


@dataclass
class TurnContext:
    """Context features for one user turn."""

    E: torch.Tensor
    Z: torch.Tensor
    A: torch.Tensor | None = None

    @property
    def f_context(self) -> torch.Tensor:
        parts = [self.E, self.Z] + ([self.A] if self.A is not None else [])
        return torch.cat(parts, dim=-1)


@dataclass
class DialogueTensors:
    """Id-space view of one dialogue, ready for batching.

    ``utt_ids`` holds the clipped token ids of each user turn (an empty
    utterance becomes a single padding token).  ``act_ids`` is the flat act
    sequence over agent turns, and ``acts_upto[i]`` counts how many of those
    acts are visible at the (i+1)-th user turn.
    """

    dialogue_id: str
    utt_ids: list[list[int]]
    act_ids: list[int]
    acts_upto: list[int]

    @property
    def n_turns(self) -> int:
        return len(self.utt_ids)


def tensorize_dialogue(dialogue: Dialogue, token_vocab: Vocab,
                       act_vocab: Vocab | None,
                       config: EncoderConfig) -> DialogueTensors:
    utt_ids: list[list[int]] = []
    act_ids: list[int] = []
    acts_upto: list[int] = []
    for turn in dialogue.turns:
        if turn.speaker == "agent":
            if act_vocab is not None:
                act_ids.extend(act_vocab.ids(turn.acts))
        else:
            ids = token_vocab.ids(turn.tokens[: config.max_turn_tokens])
            utt_ids.append(ids or [PAD_ID])
            acts_upto.append(len(act_ids))
    return DialogueTensors(dialogue.id, utt_ids, act_ids, acts_upto)


@dataclass
class DialogueContext:
    """Per-turn context tensors for one dialogue: rows align with user turns."""

    E: torch.Tensor  # [N, 2*utterance_hidden]
    Z: torch.Tensor  # [N, dialogue_hidden]
    A: torch.Tensor | None  # [N, act_hidden] when acts are in use

    @property
    def f_context(self) -> torch.Tensor:
        parts = [self.E, self.Z] + ([self.A] if self.A is not None else [])
        return torch.cat(parts, dim=-1)

    def turn(self, i: int) -> TurnContext:
        """Context of the i-th user turn, 1-based."""
        a = self.A[i - 1] if self.A is not None else None
        return TurnContext(E=self.E[i - 1], Z=self.Z[i - 1], A=a)


class ContextEncoder(nn.Module):
    """Token embeddings plus the three recurrent context encoders."""

    def __init__(self, n_tokens: int, n_acts: int, config: EncoderConfig,
                 use_acts: bool = True):
        super().__init__()
        self.config = config
        self.use_acts = use_acts
        self.token_emb = nn.Embedding(n_tokens, config.token_embed_dim,
                                      padding_idx=PAD_ID)
        self.utt_lstm = nn.LSTM(config.token_embed_dim, config.utterance_hidden_dim,
                                batch_first=True, bidirectional=True)
        self.dlg_lstm = nn.LSTM(config.utterance_dim, config.dialogue_hidden_dim,
                                batch_first=True)
        if use_acts:
            self.act_emb = nn.Embedding(n_acts, config.act_embed_dim,
                                        padding_idx=PAD_ID)
            self.act_lstm = nn.LSTM(config.act_embed_dim, config.act_hidden_dim,
                                    batch_first=True)
        self.drop = nn.Dropout(config.dropout)

    # -- single-example paths --------------------------------------------

    def encode_utterance(self, token_ids: Sequence[int]) -> torch.Tensor:
        """Utterance vector: concat of final backward and final forward states."""
        ids = list(token_ids)[: self.config.max_turn_tokens] or [PAD_ID]
        batch = torch.tensor([ids], dtype=torch.long)
        lens = torch.tensor([len(ids)])
        return self.encode_utterance_batch(batch, lens)[0]

    def encode_dialogue(self, utterance_encodings: torch.Tensor) -> torch.Tensor:
        """Dialogue vector over a sequence of utterance encodings.

        Only the most recent ``max_history_turns`` encodings are consumed.
        """
        seq = utterance_encodings[-self.config.max_history_turns:]
        _, (h, _) = self.dlg_lstm(seq.unsqueeze(0))
        return h[0, 0]

    def encode_acts(self, act_ids: Sequence[int]) -> torch.Tensor:
        """Act-history vector; the empty history encodes to zeros."""
        if not self.use_acts:
            raise RuntimeError("this encoder was built without an act encoder")
        ids = list(act_ids)
        weight = self.act_emb.weight
        if not ids:
            return weight.new_zeros(self.config.act_hidden_dim)
        emb = self.act_emb(torch.tensor([ids], dtype=torch.long))
        _, (h, _) = self.act_lstm(emb)
        return h[0, 0]

    # -- batched paths -----------------------------------------------------

    def encode_utterance_batch(self, ids: torch.Tensor,
                               lens: torch.Tensor) -> torch.Tensor:
        """Encode a [M, L] id batch with true lengths into [M, 2H] vectors."""
        emb = self.drop(self.token_emb(ids))
        packed = pack_padded_sequence(emb, lens.cpu(), batch_first=True,
                                      enforce_sorted=False)
        _, (h, _) = self.utt_lstm(packed)
        # h[0] is the forward final state, h[1] the backward final state.
        return torch.cat([h[1], h[0]], dim=-1)

    def encode_contexts(self, dials: list[DialogueTensors]) -> list[DialogueContext]:
        """Per-turn E/Z/A for a batch of dialogues in one recurrent pass.

        The single pass yields, at each step i, exactly the encoding of the
        prefix up to user turn i; turns beyond the history window are
        re-encoded on their clipped window afterwards (rare).
        """
        window = self.config.max_history_turns
        n_turns = [d.n_turns for d in dials]
        n_max = max(n_turns)
        l_max = max(len(u) for d in dials for u in d.utt_ids)
        batch = len(dials)

        ids = torch.full((batch, n_max, l_max), PAD_ID, dtype=torch.long)
        lens = torch.ones(batch, n_max, dtype=torch.long)
        for b, d in enumerate(dials):
            for j, utt in enumerate(d.utt_ids):
                ids[b, j, : len(utt)] = torch.tensor(utt, dtype=torch.long)
                lens[b, j] = len(utt)
        e_flat = self.encode_utterance_batch(ids.view(batch * n_max, l_max),
                                             lens.view(-1))
        e_all = e_flat.view(batch, n_max, -1)

        packed = pack_padded_sequence(e_all, torch.tensor(n_turns),
                                      batch_first=True, enforce_sorted=False)
        out, _ = self.dlg_lstm(packed)
        z_all, _ = pad_packed_sequence(out, batch_first=True, total_length=n_max)

        a_all = None
        if self.use_acts:
            a_max = max(max((len(d.act_ids) for d in dials), default=1), 1)
            act_ids = torch.full((batch, a_max), PAD_ID, dtype=torch.long)
            act_lens = torch.ones(batch, dtype=torch.long)
            for b, d in enumerate(dials):
                if d.act_ids:
                    act_ids[b, : len(d.act_ids)] = torch.tensor(d.act_ids)
                    act_lens[b] = len(d.act_ids)
            emb = self.act_emb(act_ids)
            packed_a = pack_padded_sequence(emb, act_lens, batch_first=True,
                                            enforce_sorted=False)
            out_a, _ = self.act_lstm(packed_a)
            act_out, _ = pad_packed_sequence(out_a, batch_first=True,
                                             total_length=a_max)
            upto = torch.zeros(batch, n_max, dtype=torch.long)
            for b, d in enumerate(dials):
                upto[b, : d.n_turns] = torch.tensor(d.acts_upto)
            gather_idx = (upto - 1).clamp(min=0)
            hidden = act_out.size(-1)
            a_all = act_out.gather(
                1, gather_idx.unsqueeze(-1).expand(batch, n_max, hidden))
            a_all = a_all * (upto > 0).unsqueeze(-1)

        contexts = []
        for b, d in enumerate(dials):
            n = d.n_turns
            e, z = e_all[b, :n], z_all[b, :n]
            a = a_all[b, :n] if a_all is not None else None
            if n > window:
                z_rows = [z[j] if j < window else
                          self.encode_dialogue(e[: j + 1]) for j in range(n)]
                z = torch.stack(z_rows)
                if a is not None:
                    a_rows = []
                    for j in range(n):
                        if j < window:
                            a_rows.append(a[j])
                        else:
                            start = d.acts_upto[j - window]
                            stop = d.acts_upto[j]
                            a_rows.append(self.encode_acts(d.act_ids[start:stop]))
                    a = torch.stack(a_rows)
            contexts.append(DialogueContext(E=e, Z=z, A=a))
        return contexts


# --- training loop -------------------------------------------------------------


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    dev_loss: float


@dataclass
class TrainResult:
    trace: list[EpochStats]
    best_epoch: int
    best_dev_loss: float


BatchLoss = Callable[[nn.Module, list], tuple[torch.Tensor, int]]


def train_model(model: nn.Module, train_examples: list, dev_examples: list,
                config: TrainConfig, batch_loss: BatchLoss) -> TrainResult:
    """Adam epoch loop; the model ends up holding the best-dev-loss weights.

    ``batch_loss`` maps (model, example chunk) to a summed loss tensor and the
    number of items it covers; per-step gradients use the mean.  A non-finite
    loss aborts immediately.  Shuffling is driven by the config seed, so a
    fixed seed reproduces the loss trace exactly.
    """
    if not train_examples:
        raise ValueError("no training examples")
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    rng = random.Random(config.seed)
    order = list(range(len(train_examples)))
    trace: list[EpochStats] = []
    best_state = None
    best_epoch, best_dev = -1, math.inf
    for epoch in range(1, config.epochs + 1):
        model.train()
        rng.shuffle(order)
        total, items = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            chunk = [train_examples[i] for i in order[start:start + config.batch_size]]
            loss, n = batch_loss(model, chunk)
            value = float(loss.detach())
            if not math.isfinite(value):
                raise RuntimeError(
                    f"non-finite training loss ({value}) at epoch {epoch}, "
                    f"batch starting at example {start}")
            optimizer.zero_grad()
            (loss / max(n, 1)).backward()
            optimizer.step()
            total += value
            items += n
        train_loss = total / max(items, 1)
        dev_loss = (_eval_loss(model, dev_examples, config.batch_size, batch_loss)
                    if dev_examples else train_loss)
        if not math.isfinite(dev_loss):
            raise RuntimeError(f"non-finite dev loss ({dev_loss}) at epoch {epoch}")
        trace.append(EpochStats(epoch, train_loss, dev_loss))
        if dev_loss < best_dev:
            best_dev, best_epoch = dev_loss, epoch
            best_state = copy.deepcopy(model.state_dict())
    model.load_state_dict(best_state)
    return TrainResult(trace=trace, best_epoch=best_epoch, best_dev_loss=best_dev)


def _eval_loss(model: nn.Module, examples: list, batch_size: int,
               batch_loss: BatchLoss) -> float:
    model.eval()
    total, items = 0.0, 0
    with torch.no_grad():
        for start in range(0, len(examples), batch_size):
            loss, n = batch_loss(model, examples[start:start + batch_size])
            total += float(loss)
            items += n
    return total / max(items, 1)


# --- persistence ----------------------------------------------------------------


def save_checkpoint(path, payload: dict) -> None:
    torch.save(payload, path)


def load_checkpoint(path) -> dict:
    return torch.load(path, map_location="cpu", weights_only=False)


def write_loss_trace(path, trace: list[EpochStats]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["epoch", "train_loss", "dev_loss"])
        for row in trace:
            writer.writerow([row.epoch, f"{row.train_loss:.6f}", f"{row.dev_loss:.6f}"])


def encoder_config_to_dict(config: EncoderConfig) -> dict:
    return asdict(config)


def train_config_to_dict(config: TrainConfig) -> dict:
    return asdict(config)
