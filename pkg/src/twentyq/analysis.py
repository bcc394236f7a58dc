"""Post-hoc analysis of trained agents.

Everything here reads beliefs and transcripts out of greedy evaluation play:
slot precision/recall against the user's actual answers, a ridge probe from
the belief vector to the number of guesses spent, cosine-KNN retrieval error
over latent dialog states, and learning-curve extraction from metrics logs.
"""

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .drqn import QNetwork
from .featurizer import ActionMask, compose
from .game_env import GameEnv, LatentSlot
from .persona_db import Intent
from .trainer import TrainConfig, World, load_world

DESK_SAMPLE_COUNT = 2_000


@dataclass
class BeliefSamples:
    h: np.ndarray          # (n, H) belief vectors at decision points
    latent: np.ndarray     # (n, |Q|) LatentSlot values
    guesses: np.ndarray    # (n,) guesses already made entering the decision
    episode: np.ndarray    # (n,) episode index per sample

    def __len__(self):
        return self.h.shape[0]


def collect_belief_samples(net: QNetwork, world: World, n_samples: int,
                           rng: np.random.Generator) -> BeliefSamples:
    """Greedy play until n_samples decision points are gathered.

    Each sample pairs the belief h that scored the decision with the latent
    per-question dialog state and the number of guesses spent so far.
    """
    from .drqn import masked_argmax

    env = world.env
    hs, latents, guesses, eps = [], [], [], []
    episode = 0
    while len(hs) < n_samples:
        state, obs = env.reset(rng)
        belief = net.zero_belief()
        while not state.terminal and len(hs) < n_samples:
            mask = env.mask(state)
            x = compose(obs, world.vocab, world.actions, world.db.d)
            q, belief, _ = net.step(x[None, :], belief)
            hs.append(belief.h[0].copy())
            latents.append([int(v) for v in state.latent])
            guesses.append(state.guess_count)
            eps.append(episode)
            action = masked_argmax(q, mask, world.actions)
            res = env.step(state, action, rng)
            obs = res.obs
            state = res.state
        episode += 1
    return BeliefSamples(h=np.array(hs), latent=np.array(latents, dtype=np.int8),
                         guesses=np.array(guesses, dtype=np.int64),
                         episode=np.array(eps, dtype=np.int64))


# ---------------------------------------------------------------------------
# Slot precision / recall
# ---------------------------------------------------------------------------

INTENT_LABELS = ("yes", "no", "unknown")


@dataclass
class SlotConfusion:
    """3x3 counts, predicted intent (rows) x true intent (columns)."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (3, 3):
            raise ValueError(f"confusion must be 3x3, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise ValueError("confusion counts must be non-negative")

    @classmethod
    def from_pairs(cls, pairs) -> "SlotConfusion":
        counts = np.zeros((3, 3), dtype=np.int64)
        for predicted, true in pairs:
            counts[int(predicted), int(true)] += 1
        return cls(counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def precision_recall(conf) -> dict:
    """Per-intent precision/recall/F1 from a predicted-x-true confusion.

    Accepts a SlotConfusion, a raw 3x3 array, or an iterable of
    (predicted, true) pairs. Zero-denominator cells are reported as None
    rather than 0 so "the agent never predicted this class" is
    distinguishable from "always wrong".
    """
    if not isinstance(conf, SlotConfusion):
        raw = conf if isinstance(conf, np.ndarray) else list(conf)
        arr = np.asarray(raw)
        conf = (SlotConfusion(arr) if arr.ndim == 2 and arr.shape == (3, 3)
                else SlotConfusion.from_pairs(raw))
    counts = conf.counts
    predicted_totals = counts.sum(axis=1)
    true_totals = counts.sum(axis=0)
    out = {}
    for intent in Intent:
        i = int(intent)
        tp = int(counts[i, i])
        precision = tp / predicted_totals[i] if predicted_totals[i] else None
        recall = tp / true_totals[i] if true_totals[i] else None
        f1 = None
        if precision is not None and recall is not None and precision + recall:
            f1 = 2 * precision * recall / (precision + recall)
        out[INTENT_LABELS[i]] = {
            "precision": precision, "recall": recall, "f1": f1,
            "support": int(true_totals[i]),
        }
    out["accuracy"] = (float(np.trace(counts)) / conf.total
                       if conf.total else None)
    return out


def slot_pairs_from_records(records, actions):
    """(predicted, true) intent pairs from the slot decisions of transcripts."""
    pairs = []
    for record in records:
        for step in record.steps:
            if step.mask is ActionMask.SLOT_ONLY and step.slot_label is not None:
                pairs.append((actions.intent_of(step.action), step.slot_label))
    return pairs


# ---------------------------------------------------------------------------
# Ridge probe: belief -> candidate count
# ---------------------------------------------------------------------------

def ridge_fit(X: np.ndarray, y: np.ndarray, lam: float = 1.0) -> np.ndarray:
    """Closed-form ridge with a penalized bias column appended to X."""
    Xb = np.hstack([X, np.ones((X.shape[0], 1))])
    A = Xb.T @ Xb + lam * np.eye(Xb.shape[1])
    return np.linalg.solve(A, Xb.T @ y)


def ridge_predict(w: np.ndarray, X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))]) @ w


def r_squared(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        return 0.0
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    return 1.0 - ss_res / ss_tot


def probe_guess_count(samples: BeliefSamples, lam: float = 1.0,
                      train_frac: float = 0.8, seed: int = 0) -> dict:
    """How linearly decodable the number of spent guesses is from the belief."""
    n = len(samples)
    order = np.random.default_rng(seed).permutation(n)
    cut = int(train_frac * n)
    train, test = order[:cut], order[cut:]
    y = samples.guesses.astype(np.float64)
    w = ridge_fit(samples.h[train], y[train], lam)
    return {"r2": r_squared(y[test], ridge_predict(w, samples.h[test])),
            "r2_train": r_squared(y[train], ridge_predict(w, samples.h[train])),
            "n_train": int(cut), "n_test": int(n - cut), "lam": lam}


# ---------------------------------------------------------------------------
# Cosine-KNN retrieval error over latent states
# ---------------------------------------------------------------------------

def retrieval_error(samples: BeliefSamples, k: int = 5,
                    chunk: int = 512) -> dict:
    """p_diff: mean fraction of k nearest neighbors (cosine, self excluded)
    whose latent value differs, per question slot and averaged."""
    H = samples.h
    n = len(samples)
    if n <= k:
        raise ValueError(f"need more than k={k} samples, got {n}")
    norms = np.linalg.norm(H, axis=1, keepdims=True)
    Hn = H / np.maximum(norms, 1e-12)
    n_slots = samples.latent.shape[1]
    diff_sum = np.zeros(n_slots)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        sims = Hn[start:stop] @ Hn.T
        sims[np.arange(stop - start), np.arange(start, stop)] = -np.inf
        nbrs = np.argpartition(-sims, k - 1, axis=1)[:, :k]
        own = samples.latent[start:stop]          # (c, Q)
        nb = samples.latent[nbrs]                 # (c, k, Q)
        diff_sum += (nb != own[:, None, :]).mean(axis=1).sum(axis=0)
    per_slot = diff_sum / n
    return {"per_slot": per_slot.tolist(), "mean": float(per_slot.mean()),
            "k": k, "n": n}


# ---------------------------------------------------------------------------
# Learning curves
# ---------------------------------------------------------------------------

def learning_curves(metrics_path, phase: str | None = None) -> dict:
    """Win-rate/loss series from a metrics log, with gaps marked.

    Returns arrays plus a "gaps" list of (before, after) env_steps pairs
    wherever the eval cadence jumps by more than 1.5x its median interval.
    """
    lines = [json.loads(line)
             for line in Path(metrics_path).read_text().splitlines() if line]
    rows = [doc for doc in lines
            if "win_rate" in doc and (phase is None or doc["phase"] == phase)]
    steps = [doc["env_steps"] for doc in rows]
    series = {
        "env_steps": steps,
        "win_rate": [doc["win_rate"] for doc in rows],
        "avg_turns": [doc["avg_turns"] for doc in rows],
        "avg_raw_return": [doc["avg_raw_return"] for doc in rows],
        "loss_mean": [doc.get("loss_mean") for doc in rows],
        "phase": [doc["phase"] for doc in rows],
    }
    gaps = []
    deltas = np.diff(steps)
    if len(deltas):
        typical = float(np.median(deltas))
        for i, d in enumerate(deltas):
            if typical > 0 and d > 1.5 * typical:
                gaps.append((steps[i], steps[i + 1]))
    series["gaps"] = gaps
    return series


def merge_learning_curves(logs: dict) -> dict:
    """Align win-rate curves from several regimes on a shared step axis.

    `logs` maps a regime name to its metrics path. Steps missing from a
    regime are emitted as None — an explicit gap marker, not dropped rows.
    A single log passes through unchanged.
    """
    curves = {name: learning_curves(path) for name, path in logs.items()}
    steps = sorted({s for c in curves.values() for s in c["env_steps"]})
    win_rate = {}
    for name, c in curves.items():
        at = dict(zip(c["env_steps"], c["win_rate"]))
        win_rate[name] = [at.get(s) for s in steps]
    return {"env_steps": steps, "win_rate": win_rate}


# ---------------------------------------------------------------------------
# Whole-run analysis
# ---------------------------------------------------------------------------

def list_checkpoints(run_dir) -> list:
    """Numbered eval checkpoints in training order, then ckpt_final."""
    run_dir = Path(run_dir)
    numbered = sorted(p for p in run_dir.glob("ckpt_[0-9]*") if p.is_dir())
    final = run_dir / "ckpt_final"
    return numbered + ([final] if final.is_dir() else [])


def analyze_checkpoint(ckpt_dir, world: World, n_samples: int,
                       seed: int = 0, records: list | None = None) -> dict:
    """Probe, retrieval, and slot metrics for one checkpoint.

    Slot metrics come from a fresh 100-episode greedy evaluation unless
    `records` supplies existing transcripts to score instead.
    """
    net, vocab, manifest = QNetwork.load(ckpt_dir)
    if vocab is None or vocab.content_hash() != world.vocab.content_hash():
        raise ValueError(f"{ckpt_dir}: checkpoint vocabulary does not match "
                         "the configured bank")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA11A]))
    samples = collect_belief_samples(net, world, n_samples, rng)
    report = {
        "checkpoint": Path(ckpt_dir).name,
        "env_steps": manifest.get("env_steps"),
        "probe": probe_guess_count(samples, seed=seed),
        "retrieval": retrieval_error(samples),
    }
    if records is None:
        from .trainer import NetAgent, evaluate
        eval_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xE7A1]))
        eval_report = evaluate(world.env, NetAgent(net, world), 100, eval_rng,
                               keep_records=100)
        records = eval_report.records
        win_rate = eval_report.win_rate
    else:
        win_rate = sum(r.outcome == "win" for r in records) / len(records)
    conf = SlotConfusion.from_pairs(
        slot_pairs_from_records(records, world.actions))
    report["slot_metrics"] = precision_recall(conf)
    report["slot_confusion"] = conf.counts.tolist()
    report["win_rate"] = win_rate
    return report


def analyze_run(run_dir, n_samples: int = DESK_SAMPLE_COUNT,
                seed: int = 0, checkpoints: list | None = None) -> dict:
    """Probe/retrieval/slot metrics per checkpoint plus learning curves."""
    run_dir = Path(run_dir)
    config = TrainConfig.from_jsonable(
        json.loads((run_dir / "run_manifest.json").read_text())["config"])
    world = load_world(config)
    targets = [Path(c) for c in checkpoints] if checkpoints else \
        list_checkpoints(run_dir)
    if not targets:
        raise ValueError(f"{run_dir}: no checkpoints to analyze")
    reports = [analyze_checkpoint(c, world, n_samples, seed) for c in targets]
    doc = {"run_dir": str(run_dir), "n_samples": n_samples,
           "checkpoints": reports,
           "curves": learning_curves(run_dir / "metrics.jsonl")}
    (run_dir / "analysis.json").write_text(json.dumps(doc, indent=2))
    tables = analysis_tables(doc)
    table_dir = run_dir / "tables"
    table_dir.mkdir(exist_ok=True)
    for name, text in tables.items():
        (table_dir / name).write_text(text)
    return doc


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def analysis_tables(doc: dict) -> dict:
    """Plot-ready CSV tables from an analysis document, keyed by filename."""
    ckpts = doc["checkpoints"]
    probe = _csv(
        ["checkpoint", "env_steps", "r2", "r2_train", "n_train", "n_test"],
        [[c["checkpoint"], c["env_steps"], c["probe"]["r2"],
          c["probe"]["r2_train"], c["probe"]["n_train"], c["probe"]["n_test"]]
         for c in ckpts])
    n_slots = len(ckpts[0]["retrieval"]["per_slot"]) if ckpts else 0
    retrieval = _csv(
        ["checkpoint", "env_steps", "mean_p_diff"]
        + [f"q{k}" for k in range(n_slots)],
        [[c["checkpoint"], c["env_steps"], c["retrieval"]["mean"]]
         + c["retrieval"]["per_slot"] for c in ckpts])
    slots = _csv(
        ["checkpoint", "intent", "precision", "recall", "f1", "support"],
        [[c["checkpoint"], intent, m["precision"], m["recall"], m["f1"],
          m["support"]]
         for c in ckpts
         for intent, m in ((i, c["slot_metrics"][i]) for i in INTENT_LABELS)])
    tables = {"probe.csv": probe, "retrieval.csv": retrieval,
              "slots.csv": slots}
    curves = doc.get("curves")
    if curves is not None:
        curve_rows = zip(curves["env_steps"], curves["win_rate"],
                         curves["avg_turns"], curves["avg_raw_return"],
                         curves["loss_mean"], curves["phase"])
        tables["curves.csv"] = _csv(
            ["env_steps", "win_rate", "avg_turns", "avg_raw_return",
             "loss_mean", "phase"], curve_rows)
    return tables
