"""Corpus-driven user simulator.

Samples a hidden persona goal, answers the agent's questions with a
yes/no/unknown intent rendered as a natural-language utterance drawn from a
frequency-weighted bank, and adjudicates guesses. The intent is a pure
function of (goal, question); only the surface utterance is stochastic.
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .persona_db import ATTRIBUTES, BankError, Intent, bundled_data_path, true_answer

INTENT_NAMES = {Intent.YES: "yes", Intent.NO: "no", Intent.UNKNOWN: "unknown"}


class Verdict(Enum):
    CORRECT = "correct"
    WRONG = "wrong"


@dataclass(frozen=True)
class UserGoal:
    target: str
    unknown_attributes: frozenset


@dataclass(frozen=True)
class UserReply:
    intent: Intent
    utterance: str
    guess_verdict: Verdict | None = None


class UtteranceBank:
    """Intent -> [(utterance, count)] with count-proportional sampling."""

    def __init__(self, entries: dict, metadata: dict | None = None):
        self.entries = {}
        self._texts = {}
        self._cum = {}
        for intent in Intent:
            rows = entries.get(intent, ())
            if not rows:
                raise BankError(f"utterance bank missing intent {INTENT_NAMES[intent]!r}")
            texts = [t for t, _ in rows]
            counts = np.array([c for _, c in rows], dtype=np.float64)
            if len(set(texts)) != len(texts):
                raise BankError(f"duplicate utterance within intent {INTENT_NAMES[intent]!r}")
            if (counts <= 0).any():
                raise BankError(f"non-positive count in intent {INTENT_NAMES[intent]!r}")
            self.entries[intent] = tuple((t, int(c)) for t, c in rows)
            self._texts[intent] = texts
            self._cum[intent] = np.cumsum(counts)
        self.metadata = dict(metadata or {})

    @classmethod
    def from_path(cls, path) -> "UtteranceBank":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except OSError as e:
            raise BankError(f"{path}: {e}") from e
        except json.JSONDecodeError as e:
            raise BankError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
        if not isinstance(doc, dict) or "entries" not in doc:
            raise BankError(f"{path}: expected object with an 'entries' field")
        raw = doc["entries"]
        entries = {}
        for intent in Intent:
            name = INTENT_NAMES[intent]
            rows = raw.get(name)
            if not isinstance(rows, list):
                raise BankError(f"{path}: entries.{name} must be an array")
            entries[intent] = [(str(t), int(c)) for t, c in rows]
        return cls(entries, doc.get("metadata"))

    def unique_counts(self) -> dict:
        return {INTENT_NAMES[i]: len(self.entries[i]) for i in Intent}

    def all_utterances(self):
        for intent in Intent:
            for text, _ in self.entries[intent]:
                yield text

    def sample(self, intent: Intent, rng: np.random.Generator) -> str:
        cum = self._cum[intent]
        u = rng.random() * cum[-1]
        return self._texts[intent][int(np.searchsorted(cum, u, side="right"))]


def bundled_utterance_path(scale: str = "full") -> Path:
    if scale not in ("full", "desk"):
        raise ValueError(f"unknown scale {scale!r}")
    return bundled_data_path(f"utterances_{scale}.json")


@dataclass(frozen=True)
class SimConfig:
    unknown_prob: float = 0.05
    # "per_attribute": each attribute independently unknown with unknown_prob.
    # "single": with unknown_prob, exactly one uniformly chosen attribute.
    unknown_mode: str = "per_attribute"

    def __post_init__(self):
        if self.unknown_mode not in ("per_attribute", "single"):
            raise ValueError(f"unknown_mode {self.unknown_mode!r}")
        if not 0 <= self.unknown_prob < 1:
            raise ValueError("unknown_prob must be in [0, 1)")


class UserSimulator:
    def __init__(self, db, bank: UtteranceBank, config: SimConfig = SimConfig()):
        self.db = db
        self.bank = bank
        self.config = config

    def new_goal(self, rng: np.random.Generator) -> UserGoal:
        target = self.db.ids[int(rng.integers(self.db.d))]
        unknown = []
        if self.config.unknown_mode == "per_attribute":
            for attr in ATTRIBUTES:
                if rng.random() < self.config.unknown_prob:
                    unknown.append(attr)
        else:
            if rng.random() < self.config.unknown_prob:
                unknown.append(ATTRIBUTES[int(rng.integers(len(ATTRIBUTES)))])
        return UserGoal(target=target, unknown_attributes=frozenset(unknown))

    def answer_intent(self, goal: UserGoal, q) -> Intent:
        if q.attribute in goal.unknown_attributes:
            return Intent.UNKNOWN
        return true_answer(self.db.record(goal.target), q)

    def answer_question(self, goal: UserGoal, q, rng: np.random.Generator) -> UserReply:
        intent = self.answer_intent(goal, q)
        return UserReply(intent=intent, utterance=self.bank.sample(intent, rng))

    def judge_guess(self, goal: UserGoal, guessed: str,
                    rng: np.random.Generator) -> UserReply:
        if guessed not in self.db.ids:
            raise ValueError(f"unknown persona id {guessed!r}")
        correct = guessed == goal.target
        intent = Intent.YES if correct else Intent.NO
        return UserReply(
            intent=intent,
            utterance=self.bank.sample(intent, rng),
            guess_verdict=Verdict.CORRECT if correct else Verdict.WRONG,
        )
