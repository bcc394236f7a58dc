"""The dialog network: turn embedding -> LSTM belief tracker -> two Q-heads.

One verbal head scores the |Q|+1 question/guess actions; one shared slot head
scores the 3 slot-filling actions (all slots share cardinality 3 and always
target the latest asked question, so a single head suffices; per-slot heads
stay a config option). Dropout sits after the embedding tanh, on the LSTM
output fed to the heads (not on the recurrent path), and after each head's
hidden tanh.
"""

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .featurizer import ActionMask, ActionSpace, BigramVocab
from .neural_core import (
    LstmCell,
    dropout_backward,
    dropout_forward,
    load_params,
    save_params,
    tanh_backward,
    xavier_uniform,
)


@dataclass(frozen=True)
class NetworkConfig:
    feature_len: int
    n_questions: int
    embed_size: int = 30
    lstm_size: int = 256
    head_hidden: int = 128
    dropout: float = 0.3
    per_slot_heads: bool = False  # reserved; only the shared slot head exists

    def __post_init__(self):
        if min(self.feature_len, self.n_questions, self.embed_size,
               self.lstm_size, self.head_hidden) <= 0:
            raise ValueError("all network sizes must be positive")
        if self.per_slot_heads:
            raise NotImplementedError("per-slot heads are reserved, not implemented")

    @property
    def n_verbal(self) -> int:
        return self.n_questions + 1

    @property
    def n_slot(self) -> int:
        return 3


@dataclass
class BeliefState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, batch: int, size: int) -> "BeliefState":
        return cls(h=np.zeros((batch, size)), c=np.zeros((batch, size)))

    def copy(self) -> "BeliefState":
        return BeliefState(h=self.h.copy(), c=self.c.copy())


@dataclass
class QOutputs:
    verbal_q: np.ndarray
    slot_q: np.ndarray


def masked_argmax(q: QOutputs, mask: ActionMask, actions: ActionSpace) -> int:
    """Greedy action over the permitted head only, as a global action id.

    Ties break toward the lowest action id (np.argmax picks the first max).
    """
    if mask is ActionMask.VERBAL_ONLY:
        return int(np.argmax(q.verbal_q[0]))
    return actions.n_verbal + int(np.argmax(q.slot_q[0]))


class QNetwork:
    def __init__(self, config: NetworkConfig, params: dict | None = None):
        self.config = config
        self.cell = LstmCell(config.embed_size, config.lstm_size)
        self.params = params if params is not None else {}

    def init_params(self, rng: np.random.Generator) -> None:
        c = self.config
        p = {"embed/W": xavier_uniform(rng, c.feature_len, c.embed_size),
             "embed/b": np.zeros(c.embed_size)}
        p.update(self.cell.init_params(rng))
        for head, width in (("verbal", c.n_verbal), ("slot", c.n_slot)):
            p[f"{head}/W1"] = xavier_uniform(rng, c.lstm_size, c.head_hidden)
            p[f"{head}/b1"] = np.zeros(c.head_hidden)
            p[f"{head}/W2"] = xavier_uniform(rng, c.head_hidden, width)
            p[f"{head}/b2"] = np.zeros(width)
        self.params = p

    def num_params(self) -> int:
        return sum(a.size for a in self.params.values())

    def zero_belief(self, batch: int = 1) -> BeliefState:
        return BeliefState.zeros(batch, self.config.lstm_size)

    def params_copy(self) -> dict:
        return {k: v.copy() for k, v in self.params.items()}

    def set_params(self, params: dict) -> None:
        self.params = {k: v.copy() for k, v in params.items()}

    # -- forward ------------------------------------------------------------

    def _heads(self, h_d, mode, rng):
        p = self.params
        rate = self.config.dropout
        out, cache = {}, {}
        for head in ("verbal", "slot"):
            lin1 = h_d @ p[f"{head}/W1"] + p[f"{head}/b1"]
            t = np.tanh(lin1)
            t_d, m = dropout_forward(t, rate, mode, rng)
            out[head] = t_d @ p[f"{head}/W2"] + p[f"{head}/b2"]
            cache[head] = (t, t_d, m)
        return QOutputs(verbal_q=out["verbal"], slot_q=out["slot"]), cache

    def _heads_backward(self, cache, h_d, dverbal, dslot, grads):
        p = self.params
        dh_d = np.zeros_like(h_d)
        for head, dq in (("verbal", dverbal), ("slot", dslot)):
            t, t_d, m = cache[head]
            grads[f"{head}/W2"] += t_d.T @ dq
            grads[f"{head}/b2"] += dq.sum(axis=0)
            dt_d = dq @ p[f"{head}/W2"].T
            dt = tanh_backward(dropout_backward(dt_d, m), t)
            grads[f"{head}/W1"] += h_d.T @ dt
            grads[f"{head}/b1"] += dt.sum(axis=0)
            dh_d += dt @ p[f"{head}/W1"].T
        return dh_d

    def step(self, x: np.ndarray, belief: BeliefState, mode: str = "eval",
             rng: np.random.Generator | None = None):
        """One turn: (QOutputs, new belief, cache). x is (B, feature_len)."""
        if x.ndim != 2 or x.shape[1] != self.config.feature_len:
            raise ValueError(
                f"features shape {x.shape} does not match feature_len "
                f"{self.config.feature_len}")
        if mode == "train" and rng is None:
            raise ValueError("train mode requires an rng for dropout")
        p = self.params
        rate = self.config.dropout
        e = np.tanh(x @ p["embed/W"] + p["embed/b"])
        e_d, m_embed = dropout_forward(e, rate, mode, rng)
        h, c, lstm_cache = self.cell.step(e_d, belief.h, belief.c,
                                          p["lstm/W"], p["lstm/b"])
        h_d, m_h = dropout_forward(h, rate, mode, rng)
        q, head_cache = self._heads(h_d, mode, rng)
        cache = (x, e, m_embed, lstm_cache, h_d, m_h, head_cache)
        return q, BeliefState(h=h, c=c), cache

    def unroll(self, xs: np.ndarray, belief: BeliefState | None = None,
               mode: str = "eval", rng: np.random.Generator | None = None):
        """Run a whole (T, B, F) episode batch from b=0 (or a given belief).

        Returns (verbal_q (T,B,|Q|+1), slot_q (T,B,3), final belief, caches).
        """
        T, B, _ = xs.shape
        b = belief if belief is not None else self.zero_belief(B)
        verbal, slot, caches = [], [], []
        for t in range(T):
            q, b, cache = self.step(xs[t], b, mode, rng)
            verbal.append(q.verbal_q)
            slot.append(q.slot_q)
            caches.append(cache)
        return np.stack(verbal), np.stack(slot), b, caches

    # -- backward -----------------------------------------------------------

    def zero_grads(self) -> dict:
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def _step_backward(self, cache, dverbal, dslot, dh_next, dc_next, grads):
        p = self.params
        x, e, m_embed, lstm_cache, h_d, m_h, head_cache = cache
        dh_d = self._heads_backward(head_cache, h_d, dverbal, dslot, grads)
        dh = dropout_backward(dh_d, m_h) + dh_next
        de_d, dh_prev, dc_prev, dW, db = self.cell.backward_step(
            dh, dc_next, lstm_cache, p["lstm/W"])
        grads["lstm/W"] += dW
        grads["lstm/b"] += db
        de = tanh_backward(dropout_backward(de_d, m_embed), e)
        grads["embed/W"] += x.T @ de
        grads["embed/b"] += de.sum(axis=0)
        dx = de @ p["embed/W"].T
        return dx, dh_prev, dc_prev

    def backward(self, caches, dverbal: np.ndarray, dslot: np.ndarray) -> dict:
        """BPTT over an unrolled episode batch given per-step upstream
        gradients on both heads' Q outputs; returns parameter gradients."""
        grads = self.zero_grads()
        B = dverbal.shape[1]
        H = self.config.lstm_size
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in range(len(caches) - 1, -1, -1):
            _, dh_next, dc_next = self._step_backward(
                caches[t], dverbal[t], dslot[t], dh_next, dc_next, grads)
        return grads

    # -- belief-level head access (synthetic transitions) --------------------

    def heads_forward(self, h: np.ndarray, mode: str = "eval",
                      rng: np.random.Generator | None = None):
        """Apply both Q-heads to a raw belief h (B, H), treating h as a
        constant input; dropout on h mirrors the step() placement."""
        h_d, m_h = dropout_forward(h, self.config.dropout, mode, rng)
        q, head_cache = self._heads(h_d, mode, rng)
        return q, (h_d, m_h, head_cache)

    def heads_backward(self, cache, dverbal, dslot) -> dict:
        h_d, _, head_cache = cache
        grads = {k: np.zeros_like(v) for k, v in self.params.items()
                 if k.startswith(("verbal/", "slot/"))}
        self._heads_backward(head_cache, h_d, dverbal, dslot, grads)
        return grads

    # -- persistence ----------------------------------------------------------

    def save(self, directory, vocab: BigramVocab | None = None,
             manifest_extra: dict | None = None) -> None:
        extra = {"network_config": asdict(self.config)}
        if vocab is not None:
            extra["vocab_hash"] = vocab.content_hash()
            Path(directory).mkdir(parents=True, exist_ok=True)
            (Path(directory) / "vocab.json").write_text(
                json.dumps(vocab.to_jsonable()) + "\n")
        extra.update(manifest_extra or {})
        save_params(directory, self.params, extra)

    @classmethod
    def load(cls, directory):
        params, manifest = load_params(directory)
        config = NetworkConfig(**manifest["network_config"])
        net = cls(config, params=params)
        vocab = None
        vocab_file = Path(directory) / "vocab.json"
        if vocab_file.exists():
            vocab = BigramVocab.from_jsonable(json.loads(vocab_file.read_text()))
            if manifest.get("vocab_hash") != vocab.content_hash():
                raise ValueError(f"{directory}: vocab.json does not match manifest hash")
        return net, vocab, manifest
