"""Persona database: records, the question bank, and hypothesis queries.

Holds D persona records with six categorical attributes each and a bank of
yes/no questions; every question tests whether one attribute's value falls in
that question's yes_set. The agent never sees attribute values directly — it
interacts through conjunctive hypothesis queries that return the set of
personas consistent with the slots filled so far.
"""

import hashlib
import json
from dataclasses import dataclass
from enum import IntEnum
from importlib import resources
from pathlib import Path

import numpy as np

ATTRIBUTES = ("birthday", "birthplace", "degree", "gender", "profession", "nationality")

SCHEMA_VERSION = 1


class Intent(IntEnum):
    """Answer intents; also the slot-action order of the shared slot head."""

    YES = 0
    NO = 1
    UNKNOWN = 2


class BankError(ValueError):
    """A persona bank file failed parsing or validation."""


@dataclass(frozen=True)
class PersonaRecord:
    id: str
    name: str
    attributes: dict


@dataclass(frozen=True)
class QuestionSpec:
    qid: int
    attribute: str
    surface_text: str
    yes_set: frozenset


@dataclass(frozen=True)
class Hypothesis:
    """The slot-filling query form: one {Yes,No,Unknown} slot per question."""

    slots: tuple

    @classmethod
    def all_unknown(cls, n_questions: int) -> "Hypothesis":
        return cls(slots=(Intent.UNKNOWN,) * n_questions)

    def __len__(self):
        return len(self.slots)


@dataclass(frozen=True)
class QueryResult:
    consistent_ids: tuple
    count: int


def true_answer(person: PersonaRecord, q: QuestionSpec) -> Intent:
    """Ground-truth answer: Yes iff the persona's value is in the yes_set."""
    try:
        value = person.attributes[q.attribute]
    except KeyError:
        raise BankError(f"record {person.id!r} lacks attribute {q.attribute!r}")
    return Intent.YES if value in q.yes_set else Intent.NO


def apply_slot_action(h: Hypothesis, qid: int, a: Intent) -> Hypothesis:
    """Return a copy of h with slot qid set to a; all other slots unchanged."""
    if not 0 <= qid < len(h.slots):
        raise IndexError(f"qid {qid} out of range for {len(h.slots)} slots")
    slots = list(h.slots)
    slots[qid] = Intent(a)
    return Hypothesis(tuple(slots))


def bundled_data_path(name: str) -> Path:
    return Path(resources.files("twentyq.data") / name)


def bundled_bank_path(scale: str = "full") -> Path:
    if scale not in ("full", "desk"):
        raise ValueError(f"unknown scale {scale!r}")
    return bundled_data_path(f"personas_{scale}.json")


def _require(cond, where, msg):
    if not cond:
        raise BankError(f"{where}: {msg}")


def load_bank(path) -> tuple:
    """Parse and validate a persona bank file.

    Returns (records, questions) with records sorted by id. Rejects with
    field-level diagnostics: duplicate ids, values outside the declared
    attribute domains, malformed yes_sets, and questions that do not split
    the population non-trivially.
    """
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as e:
        raise BankError(f"{path}: {e}") from e
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as e:
        raise BankError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e

    _require(isinstance(doc, dict), path, "top level must be an object")
    _require(doc.get("schema_version") == SCHEMA_VERSION, path,
             f"schema_version must be {SCHEMA_VERSION}")
    domains = doc.get("attribute_domains")
    _require(isinstance(domains, dict) and set(domains) == set(ATTRIBUTES), path,
             f"attribute_domains must declare exactly {sorted(ATTRIBUTES)}")
    domain_sets = {k: frozenset(v) for k, v in domains.items()}

    raw_records = doc.get("records")
    _require(isinstance(raw_records, list) and raw_records, path,
             "records must be a non-empty array")
    records = []
    seen_ids = set()
    for i, r in enumerate(raw_records):
        where = f"{path}: records[{i}]"
        _require(isinstance(r, dict), where, "must be an object")
        rid, name, attrs = r.get("id"), r.get("name"), r.get("attributes")
        _require(isinstance(rid, str) and rid, where, "missing string field 'id'")
        _require(rid not in seen_ids, where, f"duplicate id {rid!r}")
        seen_ids.add(rid)
        _require(isinstance(name, str) and name, where, "missing string field 'name'")
        _require(isinstance(attrs, dict) and set(attrs) == set(ATTRIBUTES), where,
                 f"attributes must have exactly the keys {sorted(ATTRIBUTES)}")
        for k, v in attrs.items():
            _require(v in domain_sets[k], where,
                     f"attribute {k}={v!r} not in declared domain")
        records.append(PersonaRecord(id=rid, name=name, attributes=dict(attrs)))
    records.sort(key=lambda r: r.id)

    raw_questions = doc.get("questions")
    _require(isinstance(raw_questions, list) and raw_questions, path,
             "questions must be a non-empty array")
    questions = []
    for i, q in enumerate(raw_questions):
        where = f"{path}: questions[{i}]"
        _require(isinstance(q, dict), where, "must be an object")
        _require(q.get("qid") == i, where, f"qid must equal position {i}")
        attr = q.get("attribute")
        _require(attr in ATTRIBUTES, where, f"unknown attribute {attr!r}")
        text = q.get("surface_text")
        _require(isinstance(text, str) and text, where, "missing surface_text")
        yes_set = q.get("yes_set")
        _require(isinstance(yes_set, list) and yes_set, where, "yes_set must be non-empty")
        yes = frozenset(yes_set)
        _require(yes < domain_sets[attr], where,
                 "yes_set must be a proper subset of the attribute domain")
        spec = QuestionSpec(qid=i, attribute=attr, surface_text=text, yes_set=yes)
        n_yes = sum(1 for r in records if true_answer(r, spec) is Intent.YES)
        _require(0 < n_yes < len(records), where,
                 f"question does not split the population ({n_yes}/{len(records)} yes)")
        questions.append(spec)

    return records, questions


def question_counts(questions) -> dict:
    counts = {}
    for q in questions:
        counts[q.attribute] = counts.get(q.attribute, 0) + 1
    return counts


class PersonaDB:
    """Immutable queryable view over a loaded bank.

    Precomputes the D x |Q| yes/no answer matrix so hypothesis queries are a
    couple of vectorized reductions; result ordering is by persona id.
    """

    def __init__(self, records, questions):
        self.records = tuple(sorted(records, key=lambda r: r.id))
        self.questions = tuple(questions)
        self.ids = tuple(r.id for r in self.records)
        self._row = {pid: i for i, pid in enumerate(self.ids)}
        self._by_id = {r.id: r for r in self.records}
        self._yes = np.array(
            [[true_answer(r, q) is Intent.YES for q in self.questions]
             for r in self.records],
            dtype=bool,
        )

    @classmethod
    def from_path(cls, path) -> "PersonaDB":
        return cls(*load_bank(path))

    @property
    def d(self) -> int:
        return len(self.records)

    @property
    def n_questions(self) -> int:
        return len(self.questions)

    def record(self, pid: str) -> PersonaRecord:
        return self._by_id[pid]

    def answers_for(self, pid: str) -> np.ndarray:
        """Boolean yes-vector over all questions for one persona."""
        return self._yes[self._row[pid]].copy()

    def query(self, h: Hypothesis, excluded=frozenset()) -> QueryResult:
        if len(h.slots) != len(self.questions):
            raise ValueError(
                f"hypothesis has {len(h.slots)} slots, bank has {len(self.questions)}")
        ok = np.ones(len(self.records), dtype=bool)
        slots = np.fromiter((int(s) for s in h.slots), dtype=np.int64)
        yes_cols = np.flatnonzero(slots == int(Intent.YES))
        no_cols = np.flatnonzero(slots == int(Intent.NO))
        if yes_cols.size:
            ok &= self._yes[:, yes_cols].all(axis=1)
        if no_cols.size:
            ok &= ~self._yes[:, no_cols].any(axis=1)
        for pid in excluded:
            row = self._row.get(pid)
            if row is not None:
                ok[row] = False
        ids = tuple(pid for pid, keep in zip(self.ids, ok) if keep)
        return QueryResult(consistent_ids=ids, count=len(ids))

    def bank_hash(self) -> str:
        payload = json.dumps(
            [[r.id, r.name, sorted(r.attributes.items())] for r in self.records]
            + [[q.qid, q.attribute, q.surface_text, sorted(map(str, q.yes_set))]
               for q in self.questions],
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()
