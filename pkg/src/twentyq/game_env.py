"""Persona-guessing game environment.

The agent alternates between verbal decisions (ask one of |Q| questions or
guess) and slot decisions (write the latest answer into the hypothesis as
Yes/No/Unknown). Wins pay +30, losses -30, each wrong guess -5; every step
also carries a potential-based shaping term driven by the count of personas
still consistent with the hypothesis, so narrowing the candidate set pays
immediately without changing the optimal policy.
"""

from dataclasses import dataclass, replace
from enum import Enum, IntEnum

from .featurizer import ActionMask, ActionSpace, Observation
from .persona_db import Hypothesis, Intent, PersonaDB, apply_slot_action
from .user_sim import UserGoal, UserSimulator, Verdict


class GamePhase(Enum):
    AWAIT_VERBAL = "await_verbal"
    AWAIT_SLOT = "await_slot"
    WON = "won"
    LOST = "lost"


class LatentSlot(IntEnum):
    """Per-question latent dialog state: the user's actual answer, or not
    asked yet. Values 0-2 coincide with Intent."""

    YES = 0
    NO = 1
    UNKNOWN = 2
    NOT_ASKED = 3


@dataclass(frozen=True)
class GameConfig:
    win_reward: float = 30.0
    loss_reward: float = -30.0
    wrong_guess_penalty: float = -5.0
    max_steps: int = 100          # budget over all agent actions
    max_guesses: int = 10
    gamma: float = 0.99
    p_max: float = 2.0
    shape_all: bool = True        # False: shaping on slot transitions only

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if self.max_steps < 2 or self.max_guesses < 1:
            raise ValueError("step/guess budgets too small to play")


@dataclass(frozen=True)
class GameState:
    phase: GamePhase
    goal: UserGoal
    hypothesis: Hypothesis
    excluded: frozenset          # ids struck out by wrong guesses
    step_count: int
    guess_count: int
    d: int                       # consistent-count after the latest action
    latent: tuple                # LatentSlot per question
    pending_qid: int | None = None
    pending_label: Intent | None = None

    @property
    def terminal(self) -> bool:
        return self.phase in (GamePhase.WON, GamePhase.LOST)


@dataclass(frozen=True)
class StepResult:
    state: GameState
    obs: Observation             # input to the agent's next decision
    reward: float                # raw + shaping
    raw_reward: float
    shaping: float
    terminal: bool
    slot_label: Intent | None = None
    guessed_id: str | None = None
    utterance: str | None = None


def potential(d: int, config: GameConfig, total: int) -> float:
    """phi(d) = P_max * (1 - d/D) for live states, 0 once the set is empty."""
    if d <= 0:
        return 0.0
    return config.p_max * (1.0 - d / total)


def shaping(d_before: int, d_after: int, config: GameConfig, total: int) -> float:
    return (config.gamma * potential(d_after, config, total)
            - potential(d_before, config, total))


class GameEnv:
    """Rules engine; all methods are pure in the state (fresh GameState out)."""

    def __init__(self, db: PersonaDB, sim: UserSimulator, actions: ActionSpace,
                 config: GameConfig = GameConfig()):
        if actions.n_questions != db.n_questions:
            raise ValueError("action space and question bank disagree")
        self.db = db
        self.sim = sim
        self.actions = actions
        self.config = config

    def reset(self, rng) -> tuple:
        goal = self.sim.new_goal(rng)
        state = GameState(
            phase=GamePhase.AWAIT_VERBAL,
            goal=goal,
            hypothesis=Hypothesis.all_unknown(self.db.n_questions),
            excluded=frozenset(),
            step_count=0,
            guess_count=0,
            d=self.db.d,
            latent=(LatentSlot.NOT_ASKED,) * self.db.n_questions,
        )
        return state, Observation.start()

    def mask(self, state: GameState) -> ActionMask:
        if state.phase is GamePhase.AWAIT_VERBAL:
            return ActionMask.VERBAL_ONLY
        if state.phase is GamePhase.AWAIT_SLOT:
            return ActionMask.SLOT_ONLY
        raise ValueError(f"no actions in phase {state.phase}")

    def step(self, state: GameState, action: int, rng) -> StepResult:
        if state.phase is GamePhase.AWAIT_VERBAL:
            if not self.actions.is_verbal(action):
                raise ValueError(f"action {action} not allowed under verbal mask")
            return self.step_verbal(state, action, rng)
        if state.phase is GamePhase.AWAIT_SLOT:
            if not self.actions.is_slot(action):
                raise ValueError(f"action {action} not allowed under slot mask")
            return self.step_slot(state, action)
        raise ValueError(f"cannot step a finished game ({state.phase})")

    def _shaped(self, d_before, d_after, is_slot):
        if self.config.shape_all or is_slot:
            return shaping(d_before, d_after, self.config, self.db.d)
        return 0.0

    def step_verbal(self, state: GameState, action: int, rng) -> StepResult:
        steps = state.step_count + 1
        if self.actions.is_question(action):
            qid = action
            reply = self.sim.answer_question(state.goal, self.db.questions[qid], rng)
            latent = list(state.latent)
            latent[qid] = LatentSlot(int(reply.intent))
            out_of_steps = steps >= self.config.max_steps
            new = replace(
                state,
                phase=GamePhase.LOST if out_of_steps else GamePhase.AWAIT_SLOT,
                step_count=steps,
                latent=tuple(latent),
                pending_qid=qid,
                pending_label=reply.intent,
            )
            raw = self.config.loss_reward if out_of_steps else 0.0
            shape = self._shaped(state.d, new.d, is_slot=False)
            return StepResult(state=new,
                              obs=Observation(action, user_utterance=reply.utterance),
                              reward=raw + shape, raw_reward=raw, shaping=shape,
                              terminal=out_of_steps, utterance=reply.utterance)

        # guess: the concrete candidate is the first consistent persona by id
        candidates = self.db.query(state.hypothesis, state.excluded).consistent_ids
        guesses = state.guess_count + 1
        if not candidates:
            new = replace(state, phase=GamePhase.LOST, step_count=steps,
                          guess_count=guesses, d=0)
            raw = self.config.loss_reward
            shape = self._shaped(state.d, 0, is_slot=False)
            return StepResult(state=new, obs=Observation(action), reward=raw + shape,
                              raw_reward=raw, shaping=shape, terminal=True)

        guessed = candidates[0]
        reply = self.sim.judge_guess(state.goal, guessed, rng)
        if reply.guess_verdict is Verdict.CORRECT:
            new = replace(state, phase=GamePhase.WON, step_count=steps,
                          guess_count=guesses)
            raw = self.config.win_reward
            shape = self._shaped(state.d, new.d, is_slot=False)
            return StepResult(state=new,
                              obs=Observation(action, user_utterance=reply.utterance),
                              reward=raw + shape, raw_reward=raw, shaping=shape,
                              terminal=True, guessed_id=guessed,
                              utterance=reply.utterance)

        excluded = state.excluded | {guessed}
        d_after = self.db.query(state.hypothesis, excluded).count
        raw = self.config.wrong_guess_penalty
        lost = (guesses >= self.config.max_guesses or d_after == 0
                or steps >= self.config.max_steps)
        if lost:
            raw += self.config.loss_reward
        new = replace(state,
                      phase=GamePhase.LOST if lost else GamePhase.AWAIT_VERBAL,
                      excluded=excluded, step_count=steps, guess_count=guesses,
                      d=d_after)
        shape = self._shaped(state.d, d_after, is_slot=False)
        return StepResult(state=new,
                          obs=Observation(action, user_utterance=reply.utterance),
                          reward=raw + shape, raw_reward=raw, shaping=shape,
                          terminal=lost, guessed_id=guessed,
                          utterance=reply.utterance)

    def step_slot(self, state: GameState, action: int) -> StepResult:
        intent = self.actions.intent_of(action)
        hypothesis = apply_slot_action(state.hypothesis, state.pending_qid, intent)
        d_after = self.db.query(hypothesis, state.excluded).count
        steps = state.step_count + 1
        label = state.pending_label
        lost = d_after == 0 or steps >= self.config.max_steps
        raw = self.config.loss_reward if lost else 0.0
        new = replace(state,
                      phase=GamePhase.LOST if lost else GamePhase.AWAIT_VERBAL,
                      hypothesis=hypothesis, step_count=steps, d=d_after,
                      pending_qid=None, pending_label=None)
        shape = self._shaped(state.d, d_after, is_slot=True)
        return StepResult(state=new, obs=Observation(action, db_count=d_after),
                          reward=raw + shape, raw_reward=raw, shaping=shape,
                          terminal=lost, slot_label=label)


__all__ = [
    "ActionMask", "GameConfig", "GameEnv", "GamePhase", "GameState",
    "LatentSlot", "StepResult", "potential", "shaping",
]
