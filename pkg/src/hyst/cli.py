"""Command-line pipeline: ingest, analyze, train, track, select, evaluate.

Every subcommand reads and writes named artifacts inside a working
directory, so the pipeline can be run one stage at a time or end to end
(``reproduce``).  Artifacts are immutable: rewriting one with identical
bytes is a no-op, rewriting it with different bytes is an error (pick a
fresh working directory instead).  An append-only ``manifest.jsonl``
records what produced each artifact: the subcommand, the configuration
hash, and the input artifacts.  Nothing in the manifest or the artifacts
depends on wall-clock time, so reruns are byte-reproducible.

Configuration comes from defaults, then an optional YAML file (``--config``),
then command-line flags, in increasing precedence.  The corpus directory
comes from ``--data`` or the ``HYST_DATA`` environment variable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import yaml

from .candidates import (
    candidate_sets_to_jsonl,
    global_value_set,
    reachability_report,
)
from .corpus import (
    SLOT_KEYS,
    CorpusError,
    Dialogue,
    Ontology,
    build_ontology,
    corpus_stats,
    corpus_to_jsonl,
    load_all_splits,
    load_corpus_jsonl,
    slot_stats,
    subsample,
)
from .encoders import EncoderConfig, TrainConfig, TrainResult
from .evaluator import evaluate, format_table, joint_goal_accuracy, report_to_text
from .hybrid import (
    METHOD_JST,
    METHOD_OVST,
    combine,
    ensemble_vote,
    load_assignment,
    per_slot_accuracy,
    select_methods,
)
from .jst_tracker import load_jst_tracker, save_jst_tracker, train_jst
from .ov_tracker import (
    load_ov_tracker,
    oracle_track_corpus,
    save_ov_tracker,
    train_ov,
)
from .predictions import (
    AlignmentError,
    gold_predictions,
    load_predictions_jsonl,
    majority_predictions,
    predictions_to_jsonl,
)

DATA_ENV_VAR = "HYST_DATA"
SPLITS = ("train", "dev", "test")


class PipelineError(Exception):
    """A user-fixable pipeline problem; rendered without a traceback."""


class ArtifactError(PipelineError):
    """An artifact would be overwritten with different contents."""


# --- configuration -----------------------------------------------------------------


@dataclass
class RunConfig:
    """Everything a pipeline run depends on besides the corpus itself."""

    data_root: str | None = None
    workdir: str = "runs"
    seed: int = 13
    seeds: tuple[int, ...] = (13, 29, 47)
    max_ngram: int = 8
    threshold: float = 0.5
    desk_scale: bool = False
    desk_fraction: float = 0.15
    epochs: int = 20
    desk_epochs: int = 6
    batch_size: int = 128
    learning_rate: float = 0.001
    max_turn_tokens: int = 30
    max_history_turns: int = 30

    def __post_init__(self):
        if not self.seeds:
            raise PipelineError("seeds must not be empty")
        if self.seed not in self.seeds:
            self.seeds = (self.seed, *self.seeds[1:]) if len(self.seeds) > 1 \
                else (self.seed,)
        if not 0.0 < self.threshold < 1.0:
            raise PipelineError("threshold must be strictly between 0 and 1")
        if self.max_ngram < 1:
            raise PipelineError("max_ngram must be >= 1")
        if min(self.epochs, self.desk_epochs) < 1:
            raise PipelineError("epochs must be >= 1")
        if not 0.0 < self.desk_fraction <= 1.0:
            raise PipelineError("desk_fraction must be in (0, 1]")

    def encoder_config(self, kind: str) -> EncoderConfig:
        if self.desk_scale:
            base = EncoderConfig.desk_scale()
        elif kind == "ov":
            base = EncoderConfig.ov_default()
        else:
            base = EncoderConfig.jst_default()
        return replace(base, max_turn_tokens=self.max_turn_tokens,
                       max_history_turns=self.max_history_turns)

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.desk_epochs if self.desk_scale else self.epochs,
            seed=seed)


def load_run_config(config_path: str | None, overrides: dict) -> RunConfig:
    merged = asdict(RunConfig())
    if config_path:
        try:
            raw = yaml.safe_load(Path(config_path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise PipelineError(f"config file not found: {config_path}")
        except yaml.YAMLError as exc:
            raise PipelineError(f"malformed YAML in {config_path}: {exc}")
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise PipelineError(f"{config_path} must contain a mapping")
        unknown = sorted(set(raw) - set(merged))
        if unknown:
            raise PipelineError(
                f"unknown config keys in {config_path}: {', '.join(unknown)}")
        merged.update(raw)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    if isinstance(merged.get("seeds"), str):
        merged["seeds"] = merged["seeds"].split(",")
    try:
        merged["seeds"] = tuple(int(s) for s in merged["seeds"])
        return RunConfig(**merged)
    except (TypeError, ValueError) as exc:
        raise PipelineError(f"bad configuration: {exc}")


# --- workspace: immutable named artifacts plus a manifest ---------------------------


class Workspace:
    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.dir = Path(cfg.workdir)
        self.dir.mkdir(parents=True, exist_ok=True)
        payload = json.dumps(asdict(cfg), sort_keys=True).encode("utf-8")
        self.config_hash = hashlib.md5(payload).hexdigest()[:12]

    def path(self, name: str) -> Path:
        return self.dir / name

    def require(self, name: str, produced_by: str) -> Path:
        path = self.path(name)
        if not path.exists():
            raise PipelineError(
                f"missing artifact {path}; run `hyst {produced_by}` first")
        return path

    def _log(self, name: str, inputs: tuple[str, ...]) -> None:
        record = {
            "artifact": name,
            "command": self.command,
            "config": self.config_hash,
            "inputs": sorted(inputs),
        }
        with open(self.path("manifest.jsonl"), "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, sort_keys=True) + "\n")

    def write(self, name: str, data: str | bytes,
              inputs: tuple[str, ...] = ()) -> Path:
        raw = data.encode("utf-8") if isinstance(data, str) else data
        path = self.path(name)
        if path.exists():
            if path.read_bytes() == raw:
                return path
            raise ArtifactError(
                f"{path} already exists with different contents; remove it "
                f"or use a fresh --workdir")
        path.write_bytes(raw)
        self._log(name, inputs)
        return path

    def write_checkpoint(self, name: str, save_fn,
                         inputs: tuple[str, ...] = ()) -> Path:
        """Checkpoints are skip-if-present: serialized tensors are not
        guaranteed byte-stable, so presence, not content, is the identity."""
        path = self.path(name)
        if path.exists():
            return path
        save_fn(path)
        self._log(name, inputs)
        return path


def _load_split(ws: Workspace, split: str) -> list[Dialogue]:
    return load_corpus_jsonl(ws.require(f"corpus.{split}.jsonl", "ingest"))


def _load_ontology(ws: Workspace) -> Ontology:
    path = ws.require("ontology.json", "ingest")
    return Ontology.from_dict(json.loads(path.read_text(encoding="utf-8")))


def _load_values(ws: Workspace) -> frozenset[str]:
    path = ws.require("values.json", "ingest")
    return frozenset(json.loads(path.read_text(encoding="utf-8")))


def _json_text(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


# --- subcommands ---------------------------------------------------------------


def cmd_ingest(ws: Workspace) -> None:
    cfg = ws.cfg
    data_root = cfg.data_root or os.environ.get(DATA_ENV_VAR)
    if not data_root:
        raise PipelineError(
            f"no corpus directory given; pass --data or set {DATA_ENV_VAR}")
    splits = load_all_splits(data_root)
    if cfg.desk_scale:
        splits = {name: subsample(dialogues, cfg.desk_fraction)
                  for name, dialogues in splits.items()}
    if not splits["train"]:
        raise PipelineError(
            f"no training dialogues found under {data_root}"
            + (" after desk-scale subsampling" if cfg.desk_scale else ""))
    for name in SPLITS:
        ws.write(f"corpus.{name}.jsonl", corpus_to_jsonl(splits[name]))
        print(f"{name}: {len(splits[name])} dialogues, "
              f"{sum(len(d.user_turns) for d in splits[name])} user turns")
    ontology = build_ontology(splits["train"])
    ws.write("ontology.json", _json_text(ontology.to_dict()),
             inputs=("corpus.train.jsonl",))
    values = sorted(global_value_set(splits["train"]))
    ws.write("values.json", _json_text(values), inputs=("corpus.train.jsonl",))
    print(f"ontology: {sum(ontology.observed.values())} observed slot values; "
          f"{len(values)} distinct values overall")


def cmd_stats(ws: Workspace) -> None:
    corpora = {name: _load_split(ws, name) for name in SPLITS}
    ontology = _load_ontology(ws)
    split_stats = {name: corpus_stats(corpora[name]) for name in SPLITS}
    slots = slot_stats(corpora["train"], corpora["dev"], ontology)
    payload = {
        "schema_version": 1,
        "splits": {name: asdict(stats) for name, stats in split_stats.items()},
        "slots": {key: asdict(slots[key]) for key in SLOT_KEYS},
    }
    split_rows = [
        (name, s.n_dialogues, s.n_user_turns, s.user_vocab_with_numeric,
         s.user_vocab_without_numeric, s.median_user_turn_tokens)
        for name, s in split_stats.items()
    ]
    slot_rows = [(key, slots[key].vocab_size, slots[key].pct_none,
                  slots[key].jst_oov_pct) for key in SLOT_KEYS]
    text = "# corpus statistics\n\n" + format_table(
        split_rows,
        ("split", "dialogues", "user_turns", "vocab", "vocab_no_numeric",
         "median_tokens")) + "\n" + format_table(
        slot_rows, ("slot", "train_values", "pct_none_dev", "oov_pct_dev"))
    inputs = tuple(f"corpus.{s}.jsonl" for s in SPLITS) + ("ontology.json",)
    ws.write("stats.json", _json_text(payload), inputs=inputs)
    ws.write("stats.txt", text, inputs=inputs)
    print(text)


def cmd_candidates(ws: Workspace, dump_sets: bool) -> None:
    cfg = ws.cfg
    values = _load_values(ws)
    ontology = _load_ontology(ws)
    payload = {"schema_version": 1, "max_ngram": cfg.max_ngram, "splits": {}}
    rows = []
    for split in ("dev", "test"):
        corpus = _load_split(ws, split)
        report = reachability_report(corpus, values, ontology, cfg.max_ngram)
        payload["splits"][split] = {
            "n_turns": report.n_turns,
            "ov_unreachable_pct": report.ov_unreachable_pct,
            "jst_unreachable_pct": report.jst_unreachable_pct,
            "ov_ceiling_pct": report.ov_ceiling_pct,
            "jst_ceiling_pct": report.jst_ceiling_pct,
            "per_slot_ov_oov_pct": dict(report.per_slot_ov_oov_pct),
        }
        rows.append((split, report.n_turns, report.ov_unreachable_pct,
                     report.jst_unreachable_pct))
        if dump_sets:
            ws.write(f"candidates.{split}.jsonl",
                     candidate_sets_to_jsonl(corpus, values, cfg.max_ngram),
                     inputs=(f"corpus.{split}.jsonl", "values.json"))
    text = "# candidate reachability\n\n" + format_table(
        rows, ("split", "turns", "ov_unreachable_pct", "jst_unreachable_pct"))
    inputs = ("corpus.dev.jsonl", "corpus.test.jsonl", "values.json",
              "ontology.json")
    ws.write("reachability.json", _json_text(payload), inputs=inputs)
    ws.write("reachability.txt", text, inputs=inputs)
    print(text)


def _loss_csv(result: TrainResult) -> str:
    lines = ["epoch,train_loss,dev_loss"]
    lines.extend(f"{e.epoch},{e.train_loss:.6f},{e.dev_loss:.6f}"
                 for e in result.trace)
    return "\n".join(lines) + "\n"


def cmd_train(ws: Workspace, kind: str, seed: int | None) -> None:
    cfg = ws.cfg
    seed = cfg.seed if seed is None else seed
    ckpt_name = f"{kind}.seed{seed}.pt"
    if ws.path(ckpt_name).exists():
        print(f"{ckpt_name} exists; skipping training")
        return
    train = _load_split(ws, "train")
    dev = _load_split(ws, "dev")
    enc = cfg.encoder_config(kind)
    tc = cfg.train_config(seed)
    if kind == "ov":
        tracker, result = train_ov(train, dev, enc, tc,
                                   max_ngram=cfg.max_ngram,
                                   threshold=cfg.threshold)
        save_fn = lambda path: save_ov_tracker(path, tracker, tc)
    else:
        tracker, result = train_jst(train, dev, enc, tc,
                                    ontology=_load_ontology(ws))
        save_fn = lambda path: save_jst_tracker(path, tracker, tc)
    inputs = ("corpus.train.jsonl", "corpus.dev.jsonl")
    ws.write_checkpoint(ckpt_name, save_fn, inputs=inputs)
    ws.write(f"{kind}.seed{seed}.loss.csv", _loss_csv(result), inputs=inputs)
    print(f"trained {ckpt_name}: best epoch {result.best_epoch}, "
          f"dev loss {result.best_dev_loss:.4f}")


def _model_pred_name(method: str, split: str, seed: int) -> str:
    return f"preds.{method}.seed{seed}.{split}.jsonl"


def _preferred_pred_name(ws: Workspace, method: str, split: str) -> str:
    """Ensemble predictions when they exist, else the primary seed's."""
    ens = f"preds.{method}.ens.{split}.jsonl"
    if ws.path(ens).exists():
        return ens
    return _model_pred_name(method, split, ws.cfg.seed)


def cmd_predict(ws: Workspace, method: str, split: str,
                seed: int | None) -> None:
    cfg = ws.cfg
    corpus = _load_split(ws, split)
    inputs: tuple[str, ...] = (f"corpus.{split}.jsonl",)
    if method == "majority":
        preds = majority_predictions(corpus)
        name = f"preds.majority.{split}.jsonl"
    elif method == "gold":
        preds = gold_predictions(corpus)
        name = f"preds.gold.{split}.jsonl"
    elif method == "oracle":
        preds = oracle_track_corpus(corpus, _load_values(ws), cfg.max_ngram)
        name = f"preds.oracle.{split}.jsonl"
        inputs += ("values.json",)
    elif method in ("ov", "jst"):
        seed = cfg.seed if seed is None else seed
        ckpt = ws.require(f"{method}.seed{seed}.pt",
                          f"train-{method} --seed {seed}")
        tracker = (load_ov_tracker if method == "ov" else load_jst_tracker)(ckpt)
        preds = tracker.track_corpus(corpus)
        name = _model_pred_name(method, split, seed)
        inputs += (ckpt.name,)
    elif method == "hyst":
        assignment = load_assignment(ws.require("assignment.json",
                                                "select-hybrid"))
        jst_name = _preferred_pred_name(ws, "jst", split)
        ov_name = _preferred_pred_name(ws, "ov", split)
        by_method = {
            METHOD_JST: load_predictions_jsonl(
                ws.require(jst_name, f"predict --method jst --split {split}")),
            METHOD_OVST: load_predictions_jsonl(
                ws.require(ov_name, f"predict --method ov --split {split}")),
        }
        preds = combine(by_method, assignment)
        name = f"preds.hyst.{split}.jsonl"
        inputs += ("assignment.json", jst_name, ov_name)
    else:
        raise PipelineError(f"unknown prediction method {method!r}")
    ws.write(name, predictions_to_jsonl(preds), inputs=inputs)
    print(f"wrote {name} ({len(preds)} turns)")


def cmd_ensemble(ws: Workspace, method: str, split: str) -> None:
    cfg = ws.cfg
    dev = _load_split(ws, "dev")
    runs, accs, input_names = [], [], []
    for seed in cfg.seeds:
        dev_name = _model_pred_name(method, "dev", seed)
        dev_preds = load_predictions_jsonl(ws.require(
            dev_name, f"predict --method {method} --split dev --seed {seed}"))
        accs.append(joint_goal_accuracy(dev_preds, dev))
        if split == "dev":
            runs.append(dev_preds)
            input_names.append(dev_name)
        else:
            name = _model_pred_name(method, split, seed)
            runs.append(load_predictions_jsonl(ws.require(
                name, f"predict --method {method} --split {split} "
                      f"--seed {seed}")))
            input_names.append(name)
    voted = ensemble_vote(runs, accs)
    out = f"preds.{method}.ens.{split}.jsonl"
    ws.write(out, predictions_to_jsonl(voted),
             inputs=tuple(input_names) + ("corpus.dev.jsonl",))
    ws.write(f"ensemble.{method}.json", _json_text(
        {"seeds": list(cfg.seeds), "dev_joint_accuracy": accs}),
        inputs=tuple(_model_pred_name(method, "dev", s) for s in cfg.seeds))
    print(f"wrote {out} (vote over seeds {', '.join(map(str, cfg.seeds))})")


def cmd_select_hybrid(ws: Workspace, jst_pred: str | None,
                      ov_pred: str | None) -> None:
    dev = _load_split(ws, "dev")
    jst_name = jst_pred or _preferred_pred_name(ws, "jst", "dev")
    ov_name = ov_pred or _preferred_pred_name(ws, "ov", "dev")
    jst_acc = per_slot_accuracy(load_predictions_jsonl(
        ws.require(jst_name, "predict --method jst --split dev")), dev)
    ov_acc = per_slot_accuracy(load_predictions_jsonl(
        ws.require(ov_name, "predict --method ov --split dev")), dev)
    assignment = select_methods(jst_acc, ov_acc)
    rows = [(key, jst_acc[key], ov_acc[key], assignment[key])
            for key in SLOT_KEYS]
    text = "# per-slot method selection (dev)\n\n" + format_table(
        rows, ("slot", "jst_acc", "ovst_acc", "chosen"))
    inputs = (jst_name, ov_name, "corpus.dev.jsonl")
    ws.write("assignment.json",
             _json_text({k: assignment[k] for k in SLOT_KEYS}), inputs=inputs)
    ws.write("selection.txt", text, inputs=inputs)
    n_ov = sum(1 for m in assignment.values() if m == METHOD_OVST)
    print(text)
    print(f"selected open-vocabulary tracker for {n_ov} of "
          f"{len(SLOT_KEYS)} slots")


def cmd_evaluate(ws: Workspace, pred_name: str, split: str) -> float:
    corpus = _load_split(ws, split)
    pred_path = ws.path(pred_name) if os.sep not in pred_name else Path(pred_name)
    if not pred_path.exists():
        raise PipelineError(f"prediction file not found: {pred_path}")
    preds = load_predictions_jsonl(pred_path)
    report = evaluate(preds, corpus)
    stem = pred_path.name
    if stem.startswith("preds."):
        stem = stem[len("preds."):]
    if stem.endswith(".jsonl"):
        stem = stem[: -len(".jsonl")]
    inputs = (pred_path.name, f"corpus.{split}.jsonl")
    ws.write(f"eval.{stem}.json", _json_text(report.to_dict()), inputs=inputs)
    ws.write(f"eval.{stem}.txt", report_to_text(report, title=stem),
             inputs=inputs)
    print(f"{stem}: joint goal accuracy {report.overall:.4f} "
          f"over {report.n_turns} turns")
    return report.overall


def cmd_reproduce(ws: Workspace, dump_sets: bool = False) -> None:
    """Run the whole pipeline: ingest, statistics, candidates, both trackers
    over every seed, ensembles, hybrid selection, and a final scoreboard."""
    cfg = ws.cfg
    print("== ingest ==")
    cmd_ingest(ws)
    print("\n== statistics ==")
    cmd_stats(ws)
    print("\n== candidate reachability ==")
    cmd_candidates(ws, dump_sets)
    for seed in cfg.seeds:
        print(f"\n== training (seed {seed}) ==")
        cmd_train(ws, "ov", seed)
        cmd_train(ws, "jst", seed)
        for split in ("dev", "test"):
            cmd_predict(ws, "ov", split, seed)
            cmd_predict(ws, "jst", split, seed)
    print("\n== baselines ==")
    for split in ("dev", "test"):
        cmd_predict(ws, "majority", split, None)
        cmd_predict(ws, "oracle", split, None)
    if len(cfg.seeds) > 1:
        print("\n== ensembles ==")
        for method in ("ov", "jst"):
            for split in ("dev", "test"):
                cmd_ensemble(ws, method, split)
    print("\n== hybrid selection ==")
    cmd_select_hybrid(ws, None, None)
    for split in ("dev", "test"):
        cmd_predict(ws, "hyst", split, None)
    print("\n== evaluation ==")
    summary: dict = {"schema_version": 1, "config": ws.config_hash,
                     "seeds": list(cfg.seeds), "methods": {}}
    single = cfg.seeds[0]
    scoreboard = [
        ("majority", "preds.majority.{split}.jsonl"),
        ("oracle", "preds.oracle.{split}.jsonl"),
        ("ov", f"preds.ov.seed{single}.{{split}}.jsonl"),
        ("jst", f"preds.jst.seed{single}.{{split}}.jsonl"),
    ]
    if len(cfg.seeds) > 1:
        scoreboard += [("ov_ensemble", "preds.ov.ens.{split}.jsonl"),
                       ("jst_ensemble", "preds.jst.ens.{split}.jsonl")]
    scoreboard.append(("hyst", "preds.hyst.{split}.jsonl"))
    rows = []
    for label, pattern in scoreboard:
        accs = {}
        for split in ("dev", "test"):
            accs[split] = cmd_evaluate(ws, pattern.format(split=split), split)
        summary["methods"][label] = accs
        rows.append((label, accs["dev"], accs["test"]))
    text = "# joint goal accuracy\n\n" + format_table(
        rows, ("method", "dev", "test"))
    ws.write("summary.json", _json_text(summary))
    ws.write("summary.txt", text)
    print("\n" + text)


# --- argument parsing ----------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file of run settings")
    common.add_argument("--workdir", help="artifact directory (default: runs)")
    common.add_argument("--data", dest="data_root",
                        help=f"corpus directory (default: ${DATA_ENV_VAR})")
    common.add_argument("--desk-scale", action=argparse.BooleanOptionalAction,
                        default=None,
                        help="subsample the corpus and shrink the models")
    common.add_argument("--max-ngram", type=int, default=None)
    common.add_argument("--threshold", type=float, default=None)
    common.add_argument("--epochs", type=int, default=None)
    common.add_argument("--batch-size", type=int, default=None)
    common.add_argument("--learning-rate", type=float, default=None)
    common.add_argument("--seeds", default=None,
                        help="comma-separated seeds for ensembling")

    parser = argparse.ArgumentParser(
        prog="hyst",
        description="dialogue state tracking pipeline over MultiWOZ-format "
                    "corpora")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", parents=[common],
                   help="parse the raw corpus into canonical artifacts")
    sub.add_parser("stats", parents=[common],
                   help="corpus and per-slot statistics")
    p = sub.add_parser("candidates", parents=[common],
                       help="candidate reachability analysis")
    p.add_argument("--dump-sets", action="store_true",
                   help="also write per-turn candidate sets")
    for kind in ("ov", "jst"):
        p = sub.add_parser(f"train-{kind}", parents=[common],
                           help=f"train the {kind} tracker")
        p.add_argument("--seed", type=int, default=None)
    p = sub.add_parser("predict", parents=[common],
                       help="write per-turn state predictions")
    p.add_argument("--method", required=True,
                   choices=("ov", "jst", "hyst", "majority", "oracle", "gold"))
    p.add_argument("--split", required=True, choices=("train", "dev", "test"))
    p.add_argument("--seed", type=int, default=None)
    p = sub.add_parser("ensemble", parents=[common],
                       help="majority-vote predictions across seeds")
    p.add_argument("--method", required=True, choices=("ov", "jst"))
    p.add_argument("--split", required=True, choices=("dev", "test"))
    p = sub.add_parser("select-hybrid", parents=[common],
                       help="choose the better tracker per slot on dev")
    p.add_argument("--jst-pred", default=None,
                   help="dev prediction artifact for the joint tracker")
    p.add_argument("--ov-pred", default=None,
                   help="dev prediction artifact for the open-vocab tracker")
    p = sub.add_parser("evaluate", parents=[common],
                       help="score a prediction file")
    p.add_argument("--pred", required=True,
                   help="prediction artifact name or path")
    p.add_argument("--split", required=True, choices=("train", "dev", "test"))
    p = sub.add_parser("reproduce", parents=[common],
                       help="run the full pipeline end to end")
    p.add_argument("--dump-sets", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {
        "data_root": args.data_root,
        "workdir": args.workdir,
        "desk_scale": args.desk_scale,
        "max_ngram": args.max_ngram,
        "threshold": args.threshold,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "learning_rate": args.learning_rate,
        "seeds": args.seeds,
    }
    if getattr(args, "seed", None) is not None and args.command not in (
            "train-ov", "train-jst", "predict"):
        overrides["seed"] = args.seed
    try:
        cfg = load_run_config(args.config, overrides)
        ws = Workspace(cfg, args.command)
        if args.command == "ingest":
            cmd_ingest(ws)
        elif args.command == "stats":
            cmd_stats(ws)
        elif args.command == "candidates":
            cmd_candidates(ws, args.dump_sets)
        elif args.command in ("train-ov", "train-jst"):
            cmd_train(ws, args.command.split("-")[1], args.seed)
        elif args.command == "predict":
            cmd_predict(ws, args.method, args.split, args.seed)
        elif args.command == "ensemble":
            cmd_ensemble(ws, args.method, args.split)
        elif args.command == "select-hybrid":
            cmd_select_hybrid(ws, args.jst_pred, args.ov_pred)
        elif args.command == "evaluate":
            cmd_evaluate(ws, args.pred, args.split)
        elif args.command == "reproduce":
            cmd_reproduce(ws, args.dump_sets)
    except (PipelineError, CorpusError, AlignmentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
