"""Prioritized experience replay.

Two item kinds share one buffer implementation: whole EpisodeRecords (the
recurrent model trains on full unrolls) and one-step belief-level
SyntheticTransitions (hybrid learning). Priorities are p = |TD error| + eps_p;
sampling is proportional to p^alpha via a sum tree, with importance weights
(N*P)^-beta normalized by the maximum weight over the buffer.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .featurizer import ActionMask, Observation
from .persona_db import Intent


@dataclass
class EpisodeStep:
    obs: Observation          # input observed before choosing the action
    mask: ActionMask          # permitted head at this decision
    action: int               # global action id
    reward: float             # shaped reward (raw + F)
    raw_reward: float
    shaping: float
    terminal: bool
    d_after: int              # consistent count after the action resolved
    slot_label: Intent | None = None  # true intent of the latest question

    def to_jsonable(self):
        return {"obs": self.obs.to_jsonable(), "mask": self.mask.value,
                "action": self.action, "reward": self.reward,
                "raw_reward": self.raw_reward, "shaping": self.shaping,
                "terminal": self.terminal, "d_after": self.d_after,
                "slot_label": None if self.slot_label is None else int(self.slot_label)}

    @classmethod
    def from_jsonable(cls, doc):
        return cls(obs=Observation.from_jsonable(doc["obs"]),
                   mask=ActionMask(doc["mask"]), action=doc["action"],
                   reward=doc["reward"], raw_reward=doc["raw_reward"],
                   shaping=doc["shaping"], terminal=doc["terminal"],
                   d_after=doc["d_after"],
                   slot_label=None if doc["slot_label"] is None
                   else Intent(doc["slot_label"]))


@dataclass
class EpisodeRecord:
    steps: list
    outcome: str              # "win" | "loss"
    goal_target: str
    # trainer-side cache of composed step features (sparse rows); never
    # serialized or compared
    feature_cache: list | None = field(default=None, repr=False, compare=False)

    def __len__(self):
        return len(self.steps)

    def validate(self, actions=None):
        """Check structural invariants; with an ActionSpace also enforce the
        full mask alternation (question -> slot fill, wrong guess -> verbal)."""
        if self.outcome not in ("win", "loss"):
            raise ValueError(f"bad outcome {self.outcome!r}")
        if not self.steps:
            raise ValueError("empty episode")
        for i, s in enumerate(self.steps):
            if s.terminal != (i == len(self.steps) - 1):
                raise ValueError(f"terminal flag misplaced at step {i}")
        if self.steps[0].mask is not ActionMask.VERBAL_ONLY:
            raise ValueError("episodes must open with a verbal decision")
        for i, (prev, nxt) in enumerate(zip(self.steps, self.steps[1:])):
            if prev.mask is ActionMask.SLOT_ONLY:
                want = ActionMask.VERBAL_ONLY
            elif actions is None:
                continue
            else:
                want = (ActionMask.SLOT_ONLY if actions.is_question(prev.action)
                        else ActionMask.VERBAL_ONLY)
            if nxt.mask is not want:
                raise ValueError(f"mask alternation broken at step {i + 1}")
        return self

    def to_jsonable(self):
        return {"steps": [s.to_jsonable() for s in self.steps],
                "outcome": self.outcome, "goal_target": self.goal_target}

    @classmethod
    def from_jsonable(cls, doc):
        return cls(steps=[EpisodeStep.from_jsonable(s) for s in doc["steps"]],
                   outcome=doc["outcome"], goal_target=doc["goal_target"])


@dataclass
class SyntheticTransition:
    b: np.ndarray             # belief h at the live slot decision
    a_h: Intent
    r: float                  # label indicator + counterfactual shaping
    b_next: np.ndarray        # belief h after the counterfactual LSTM step
    next_mask: ActionMask = ActionMask.VERBAL_ONLY
    terminal: bool = False    # counterfactual query emptied the database


class SumTree:
    """Fixed-capacity binary sum tree over leaf values, O(log N) updates
    and prefix-sum lookups; leaves map 1:1 to buffer slots."""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.nodes = np.zeros(2 * capacity - 1, dtype=np.float64)

    def total(self) -> float:
        return float(self.nodes[0])

    def value_at(self, data_idx: int) -> float:
        return float(self.nodes[data_idx + self.capacity - 1])

    def update(self, data_idx: int, value: float) -> None:
        idx = data_idx + self.capacity - 1
        delta = value - self.nodes[idx]
        while True:
            self.nodes[idx] += delta
            if idx == 0:
                break
            idx = (idx - 1) // 2

    def get(self, cumsum: float) -> int:
        """Data index of the leaf where the running prefix sum crosses cumsum."""
        idx = 0
        while 2 * idx + 1 < len(self.nodes):
            left = 2 * idx + 1
            if cumsum <= self.nodes[left]:
                idx = left
            else:
                cumsum -= self.nodes[left]
                idx = left + 1
        return idx - (self.capacity - 1)


class PrioritizedBuffer:
    def __init__(self, capacity: int, alpha: float = 0.6, eps_p: float = 1e-3):
        self.capacity = capacity
        self.alpha = alpha
        self.eps_p = eps_p
        self.items = [None] * capacity
        self.tree = SumTree(capacity)
        self.priorities = np.zeros(capacity, dtype=np.float64)  # raw p_i
        self.pos = 0
        self.size = 0
        self.max_priority = 1.0

    def __len__(self):
        return self.size

    def push(self, item) -> int:
        """Store with the current max priority; FIFO eviction past capacity."""
        idx = self.pos
        self.items[idx] = item
        self.priorities[idx] = self.max_priority
        self.tree.update(idx, self.max_priority ** self.alpha)
        self.pos = (self.pos + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        return idx

    def sample(self, m: int, rng: np.random.Generator, beta: float = 1.0):
        """Draw m items i.i.d. proportional to p^alpha.

        Returns (items, handles, weights) with weights normalized by the
        maximum importance weight over the whole buffer.
        """
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        total = self.tree.total()
        # draws are strictly below total; the min() guards float drift in the
        # prefix subtraction from landing on an empty leaf
        idxs = np.array([min(self.tree.get(u), self.size - 1)
                         for u in rng.random(m) * total], dtype=np.int64)
        probs = np.array([self.tree.value_at(i) for i in idxs]) / total
        weights = (self.size * probs) ** (-beta)
        p_min = float(self.priorities[:self.size].min()) ** self.alpha / total
        weights /= (self.size * p_min) ** (-beta)
        return [self.items[i] for i in idxs], idxs, weights

    def update_priorities(self, handles, deltas) -> None:
        """p_i <- |delta| + eps_p; array-valued deltas (per-step TD errors of
        an episode) collapse to their mean absolute value."""
        for idx, delta in zip(handles, deltas):
            mag = float(np.mean(np.abs(delta)))
            p = mag + self.eps_p
            self.priorities[idx] = p
            self.tree.update(int(idx), p ** self.alpha)
            self.max_priority = max(self.max_priority, p)


# ---------------------------------------------------------------------------
# Optional disk snapshots (resumable training): manifest + payload files.
# ---------------------------------------------------------------------------

def _buffer_meta(buf):
    return {"capacity": buf.capacity, "alpha": buf.alpha, "eps_p": buf.eps_p,
            "pos": buf.pos, "size": buf.size, "max_priority": buf.max_priority,
            "priorities": buf.priorities[:buf.size].tolist()}


def _restore_meta(buf, meta, items):
    order = list(range(meta["size"]))
    for idx in order:
        buf.items[idx] = items[idx]
        buf.priorities[idx] = meta["priorities"][idx]
        buf.tree.update(idx, meta["priorities"][idx] ** buf.alpha)
    buf.pos = meta["pos"]
    buf.size = meta["size"]
    buf.max_priority = meta["max_priority"]


def save_episode_buffer(buf: PrioritizedBuffer, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    doc = {"kind": "episode", "meta": _buffer_meta(buf),
           "episodes": [buf.items[i].to_jsonable() for i in range(buf.size)]}
    (directory / "episodes.json").write_text(json.dumps(doc))


def load_episode_buffer(directory) -> PrioritizedBuffer:
    doc = json.loads((Path(directory) / "episodes.json").read_text())
    meta = doc["meta"]
    buf = PrioritizedBuffer(meta["capacity"], meta["alpha"], meta["eps_p"])
    _restore_meta(buf, meta, [EpisodeRecord.from_jsonable(e) for e in doc["episodes"]])
    return buf


def save_synthetic_buffer(buf: PrioritizedBuffer, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    items = [buf.items[i] for i in range(buf.size)]
    doc = {"kind": "synthetic", "meta": _buffer_meta(buf),
           "a_h": [int(t.a_h) for t in items],
           "r": [t.r for t in items],
           "next_mask": [t.next_mask.value for t in items],
           "terminal": [t.terminal for t in items]}
    (directory / "synthetic.json").write_text(json.dumps(doc))
    h = buf.items[0].b.shape[-1] if items else 0
    np.savez(directory / "synthetic.npz",
             b=np.stack([t.b for t in items]) if items else np.zeros((0, h)),
             b_next=np.stack([t.b_next for t in items]) if items else np.zeros((0, h)))


def load_synthetic_buffer(directory) -> PrioritizedBuffer:
    directory = Path(directory)
    doc = json.loads((directory / "synthetic.json").read_text())
    arrays = np.load(directory / "synthetic.npz")
    meta = doc["meta"]
    items = [SyntheticTransition(b=arrays["b"][i], a_h=Intent(doc["a_h"][i]),
                                 r=doc["r"][i], b_next=arrays["b_next"][i],
                                 next_mask=ActionMask(doc["next_mask"][i]),
                                 terminal=doc["terminal"][i])
             for i in range(meta["size"])]
    buf = PrioritizedBuffer(meta["capacity"], meta["alpha"], meta["eps_p"])
    _restore_meta(buf, meta, items)
    return buf
