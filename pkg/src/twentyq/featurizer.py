"""Per-turn observations and their vectorization.

An observation is (last action, user utterance | db count); its feature
vector is the concatenation [action one-hot | bag-of-bigram counts | d/D].
Utterances are lowercased and whitespace-tokenized with sentence-boundary
markers; the bigram vocabulary is frozen from the utterance bank, so
out-of-vocabulary bigrams (e.g. from live human text) are dropped.
"""

import hashlib
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .persona_db import Intent

BOS = "<s>"
EOS = "</s>"


class ActionMask(Enum):
    """Which Q-head is permitted this turn; exactly one at any time."""

    VERBAL_ONLY = "verbal"
    SLOT_ONLY = "slot"

# Distinguished episode-start marker: featurizes to an all-zero action block.
START_ACTION = -1


def bigrams(text: str) -> list:
    tokens = text.lower().split()
    if not tokens:
        return []
    padded = [BOS] + tokens + [EOS]
    return [f"{a} {b}" for a, b in zip(padded, padded[1:])]


@dataclass(frozen=True)
class BigramVocab:
    index: dict

    @property
    def size(self) -> int:
        return len(self.index)

    def to_jsonable(self) -> dict:
        return {"bigrams": sorted(self.index, key=self.index.get)}

    @classmethod
    def from_jsonable(cls, doc: dict) -> "BigramVocab":
        return cls(index={b: i for i, b in enumerate(doc["bigrams"])})

    def content_hash(self) -> str:
        payload = json.dumps(self.to_jsonable(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


def build_vocab(bank) -> BigramVocab:
    """All bigrams occurring in the bank, indexed lexicographically."""
    seen = set()
    for text in bank.all_utterances():
        seen.update(bigrams(text))
    if not seen:
        raise ValueError("utterance bank produced an empty bigram vocabulary")
    return BigramVocab(index={b: i for i, b in enumerate(sorted(seen))})


def featurize_utterance(text: str, vocab: BigramVocab) -> dict:
    """Sparse bigram counts {feature index: count}; OOV bigrams dropped."""
    counts = {}
    for b in bigrams(text):
        i = vocab.index.get(b)
        if i is not None:
            counts[i] = counts.get(i, 0) + 1
    return counts


@dataclass(frozen=True)
class ActionSpace:
    """Global action-id layout: questions 0..|Q|-1, guess |Q|, then slots.

    Slot action ids follow the verbal block in Intent order, so
    slot_id(intent) = |Q| + 1 + intent.
    """

    n_questions: int

    @property
    def guess_id(self) -> int:
        return self.n_questions

    @property
    def n_verbal(self) -> int:
        return self.n_questions + 1

    @property
    def n_slot(self) -> int:
        return len(Intent)

    @property
    def n_actions(self) -> int:
        return self.n_verbal + self.n_slot

    def slot_id(self, intent: Intent) -> int:
        return self.n_verbal + int(intent)

    def is_question(self, action: int) -> bool:
        return 0 <= action < self.n_questions

    def is_guess(self, action: int) -> bool:
        return action == self.guess_id

    def is_verbal(self, action: int) -> bool:
        return 0 <= action < self.n_verbal

    def is_slot(self, action: int) -> bool:
        return self.n_verbal <= action < self.n_actions

    def intent_of(self, action: int) -> Intent:
        if not self.is_slot(action):
            raise ValueError(f"action {action} is not a slot action")
        return Intent(action - self.n_verbal)


@dataclass(frozen=True)
class Observation:
    last_action: int
    user_utterance: str | None = None
    db_count: int | None = None

    def __post_init__(self):
        if self.user_utterance is not None and self.db_count is not None:
            raise ValueError("observation carries at most one of utterance/db count")
        if self.last_action == START_ACTION and (
                self.user_utterance is not None or self.db_count is not None):
            raise ValueError("START observation must be empty")

    @classmethod
    def start(cls) -> "Observation":
        return cls(last_action=START_ACTION)

    def to_jsonable(self) -> dict:
        return {"a": self.last_action, "u": self.user_utterance, "d": self.db_count}

    @classmethod
    def from_jsonable(cls, doc: dict) -> "Observation":
        return cls(last_action=doc["a"], user_utterance=doc["u"], db_count=doc["d"])


def feature_length(vocab: BigramVocab, actions: ActionSpace) -> int:
    return actions.n_actions + vocab.size + 1


def compose(obs: Observation, vocab: BigramVocab, actions: ActionSpace,
            total_entities: int) -> np.ndarray:
    """Dense turn features [action one-hot | bigram counts | d/D]."""
    if obs.last_action != START_ACTION and not 0 <= obs.last_action < actions.n_actions:
        raise ValueError(f"action id {obs.last_action} out of range")
    x = np.zeros(feature_length(vocab, actions), dtype=np.float64)
    if obs.last_action != START_ACTION:
        x[obs.last_action] = 1.0
    if obs.user_utterance is not None:
        base = actions.n_actions
        for i, c in featurize_utterance(obs.user_utterance, vocab).items():
            x[base + i] = c
    if obs.db_count is not None:
        if not 0 <= obs.db_count <= total_entities:
            raise ValueError(f"db count {obs.db_count} outside [0, {total_entities}]")
        x[-1] = obs.db_count / total_entities
    return x
