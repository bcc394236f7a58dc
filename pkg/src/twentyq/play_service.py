"""Live game sessions against a trained checkpoint.

A human plays the user role: they privately pick a persona from the roster,
answer the agent's questions in free text, and adjudicate its guesses. Every
transition still goes through GameEnv — the human enters as a simulator
stand-in whose replies are injected per request, so the service adds no game
rules of its own.

Sessions are held in memory with per-session locks and an idle timeout;
restarting the process drops them. The same LiveSession engine backs both
the HTTP app (create_app) and the terminal play loop in the CLI.
"""

import threading
import time
import uuid
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .drqn import QNetwork, masked_argmax
from .featurizer import ActionMask, compose
from .game_env import GameEnv, GamePhase
from .persona_db import Intent
from .trainer import World, load_checkpoint
from .user_sim import UserGoal, UserReply, Verdict


class SessionError(Exception):
    """Request-level failure carrying the wire error shape."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class HumanSim:
    """Simulator stand-in whose replies come from a live human.

    The placeholder goal never influences play: the human's secret persona
    exists only in their head, question replies carry whatever text they
    typed, and guesses are settled by their verdict.
    """

    def __init__(self, placeholder_id: str):
        self._goal = UserGoal(target=placeholder_id,
                              unknown_attributes=frozenset())
        self.utterance = ""
        self.verdict = None

    def new_goal(self, rng) -> UserGoal:
        return self._goal

    def answer_question(self, goal, question, rng) -> UserReply:
        return UserReply(intent=Intent.UNKNOWN, utterance=self.utterance)

    def judge_guess(self, goal, guessed, rng) -> UserReply:
        return UserReply(intent=Intent.UNKNOWN, utterance=self.utterance,
                         guess_verdict=self.verdict)


@dataclass
class PendingMove:
    action: int
    kind: str              # "question" | "guess"
    text: str              # surface text, or the guessed persona's name
    guessed_id: str | None = None


class LiveSession:
    """One live game: agent decisions from the checkpoint, human answers.

    The belief update cadence mirrors training rollouts exactly — one
    net.step consuming the previous observation before each decision.
    """

    def __init__(self, net: QNetwork, world: World, session_id: str | None = None):
        self.net = net
        self.world = world
        self.id = session_id or uuid.uuid4().hex
        self.human = HumanSim(world.db.ids[0])
        self.env = GameEnv(world.db, self.human, world.actions,
                           world.env.config)
        self.rng = np.random.default_rng(0)   # the human sim draws nothing
        self.state, self.obs = self.env.reset(self.rng)
        self.belief = net.zero_belief()
        self.pending: PendingMove | None = None
        self.transcript: list = []
        self.decisions: list = []

    @property
    def outcome(self) -> str | None:
        if self.state.phase is GamePhase.WON:
            return "win"
        if self.state.phase is GamePhase.LOST:
            return "loss"
        return None

    def _ensure_open(self):
        if self.state.terminal:
            raise SessionError(410, "finished", f"game over: {self.outcome}")

    def _decide(self, mask: ActionMask) -> int:
        x = compose(self.obs, self.world.vocab, self.world.actions,
                    self.world.db.d)
        q, self.belief, _ = self.net.step(x[None, :], self.belief)
        return masked_argmax(q, mask, self.world.actions)

    def _advance(self, action: int):
        res = self.env.step(self.state, action, self.rng)
        self.state, self.obs = res.state, res.obs
        return res

    def next_move(self) -> dict:
        self._ensure_open()
        if self.pending is not None:
            raise SessionError(409, "answer_pending",
                               "the last move is still awaiting an answer")
        action = self._decide(ActionMask.VERBAL_ONLY)
        if self.world.actions.is_question(action):
            self.pending = PendingMove(
                action, "question", self.world.db.questions[action].surface_text)
        else:
            ids = self.world.db.query(self.state.hypothesis,
                                      self.state.excluded).consistent_ids
            if not ids:
                # nobody left to name: the game ends without adjudication
                self._advance(action)
                self.transcript.append({"role": "sys", "kind": "guess",
                                        "text": ""})
                return {"kind": "guess", "text": "",
                        "candidates_count": self.state.d,
                        "guesses_used": self.state.guess_count}
            self.pending = PendingMove(action, "guess",
                                       self.world.db.record(ids[0]).name,
                                       guessed_id=ids[0])
        self.transcript.append({"role": "sys", "kind": self.pending.kind,
                                "text": self.pending.text})
        return {"kind": self.pending.kind, "text": self.pending.text,
                "candidates_count": self.state.d,
                "guesses_used": self.state.guess_count}

    def post_answer(self, text: str | None = None,
                    verdict: str | None = None) -> dict:
        self._ensure_open()
        if self.pending is None:
            raise SessionError(409, "no_pending_move",
                               "nothing to answer; ask for a move first")
        if text is not None and not isinstance(text, str):
            raise SessionError(422, "validation", "text must be a string")
        text = (text or "").strip()
        move = self.pending
        if move.kind == "question":
            if not text:
                raise SessionError(422, "validation",
                                   "a question reply needs text")
            self.human.utterance = text
            self.transcript.append({"role": "user", "kind": "answer",
                                    "text": text})
            res = self._advance(move.action)
            self.pending = None
            decision = None
            if not res.terminal:
                # the tracker reads the reply and commits a slot value
                intent = self.world.actions.intent_of(
                    self._decide(ActionMask.SLOT_ONLY))
                self._advance(self.world.actions.slot_id(intent))
                decision = intent.name.lower()
                self.decisions.append({"qid": move.action,
                                       "question": move.text,
                                       "decision": decision,
                                       "candidates_count": self.state.d})
            return {"agent_slot_decision": decision,
                    "candidates_count": self.state.d, "state": self.view()}
        if verdict not in (Verdict.CORRECT.value, Verdict.WRONG.value):
            raise SessionError(422, "validation",
                               "a guess needs verdict 'correct' or 'wrong'")
        self.human.verdict = Verdict(verdict)
        self.human.utterance = text
        self.transcript.append({"role": "user", "kind": "verdict",
                                "text": text or verdict})
        res = self._advance(move.action)
        assert res.guessed_id == move.guessed_id
        self.pending = None
        return {"agent_slot_decision": None,
                "candidates_count": self.state.d, "state": self.view()}

    def view(self) -> dict:
        cfg = self.env.config
        return {
            "session_id": self.id,
            "phase": self.state.phase.value,
            "outcome": self.outcome,
            "hypothesis": [s.name.lower() for s in self.state.hypothesis.slots],
            "candidates_count": self.state.d,
            "candidates": list(self.world.db.query(
                self.state.hypothesis, self.state.excluded).consistent_ids),
            "excluded": sorted(self.state.excluded),
            "guesses_used": self.state.guess_count,
            "max_guesses": cfg.max_guesses,
            "steps_used": self.state.step_count,
            "max_steps": cfg.max_steps,
            "pending": ({"kind": self.pending.kind, "text": self.pending.text}
                        if self.pending else None),
            "transcript": list(self.transcript),
            "decisions": list(self.decisions),
        }


@dataclass
class _Entry:
    session: LiveSession
    lock: threading.Lock
    last_active: float


class SessionStore:
    """In-memory sessions: per-session mutual exclusion, idle expiry."""

    def __init__(self, idle_timeout: float = 1800.0, clock=time.monotonic):
        self.idle_timeout = idle_timeout
        self.clock = clock
        self._lock = threading.Lock()
        self._entries: dict = {}

    def __len__(self):
        with self._lock:
            return len(self._entries)

    def _sweep(self, now: float):
        dead = [sid for sid, e in self._entries.items()
                if now - e.last_active > self.idle_timeout]
        for sid in dead:
            del self._entries[sid]

    def add(self, session: LiveSession):
        with self._lock:
            now = self.clock()
            self._sweep(now)
            self._entries[session.id] = _Entry(session, threading.Lock(), now)

    @contextmanager
    def checkout(self, session_id: str):
        with self._lock:
            now = self.clock()
            self._sweep(now)
            entry = self._entries.get(session_id)
            if entry is None:
                raise SessionError(404, "not_found",
                                   f"no session {session_id} (expired or never created)")
            entry.last_active = now
        with entry.lock:
            yield entry.session

    def remove(self, session_id: str):
        with self._lock:
            if self._entries.pop(session_id, None) is None:
                raise SessionError(404, "not_found", f"no session {session_id}")


def create_app(checkpoint=None, *, net: QNetwork | None = None,
               world: World | None = None, idle_timeout: float = 1800.0,
               clock=time.monotonic):
    """FastAPI app over a SessionStore.

    Pass a checkpoint directory, or preloaded net+world; with neither, the
    app starts but refuses to create sessions (service unavailable).
    """
    from fastapi import FastAPI
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import JSONResponse

    if checkpoint is not None:
        net, world, _ = load_checkpoint(checkpoint)
    store = SessionStore(idle_timeout=idle_timeout, clock=clock)
    app = FastAPI(title="twentyq play service")
    app.state.store = store
    app.state.world = world

    @app.exception_handler(SessionError)
    async def session_error(request, exc: SessionError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def validation_error(request, exc):
        return JSONResponse(status_code=422,
                            content={"code": "validation", "message": str(exc)})

    @app.post("/sessions", status_code=201)
    def create_session() -> dict:
        if net is None:
            raise SessionError(503, "no_checkpoint",
                               "no checkpoint loaded; start the service with one")
        session = LiveSession(net, world)
        store.add(session)
        return {"session_id": session.id,
                "persona_roster": [{"id": pid, "name": world.db.record(pid).name}
                                   for pid in world.db.ids]}

    @app.get("/sessions/{session_id}/move")
    def next_move(session_id: str) -> dict:
        with store.checkout(session_id) as session:
            return session.next_move()

    @app.post("/sessions/{session_id}/answer")
    def post_answer(session_id: str, body: dict) -> dict:
        with store.checkout(session_id) as session:
            return session.post_answer(text=body.get("text"),
                                       verdict=body.get("verdict"))

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str) -> dict:
        with store.checkout(session_id) as session:
            return session.view()

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        store.remove(session_id)

    return app


__all__ = ["HumanSim", "LiveSession", "PendingMove", "SessionError",
           "SessionStore", "create_app"]
