"""Sum-tree prioritized replay: proportional sampling, importance weights,
eviction, and snapshot round-trips."""

import numpy as np
import pytest

from twentyq.featurizer import ActionMask, ActionSpace, Observation, START_ACTION
from twentyq.persona_db import Intent
from twentyq.replay import (
    EpisodeRecord,
    EpisodeStep,
    PrioritizedBuffer,
    SumTree,
    SyntheticTransition,
    load_episode_buffer,
    load_synthetic_buffer,
    save_episode_buffer,
    save_synthetic_buffer,
)


def make_step(action, mask, *, terminal=False, utterance=None, count=None,
              reward=0.0, label=None):
    return EpisodeStep(obs=Observation(START_ACTION), mask=mask, action=action,
                       reward=reward, raw_reward=reward, shaping=0.0,
                       terminal=terminal, d_after=count or 30, slot_label=label)


def make_episode(tag="e"):
    steps = [
        make_step(0, ActionMask.VERBAL_ONLY),
        make_step(32, ActionMask.SLOT_ONLY, label=Intent.YES),
        make_step(31, ActionMask.VERBAL_ONLY, terminal=True, reward=30.0),
    ]
    return EpisodeRecord(steps=steps, outcome="win", goal_target=tag)


class TestSumTree:
    def test_total_accumulates(self):
        tree = SumTree(4)
        tree.update(0, 1.0)
        tree.update(1, 3.0)
        assert tree.total() == pytest.approx(4.0)
        assert tree.value_at(0) == pytest.approx(1.0)
        assert tree.value_at(1) == pytest.approx(3.0)

    def test_update_overwrites(self):
        tree = SumTree(4)
        tree.update(2, 5.0)
        tree.update(2, 0.5)
        assert tree.total() == pytest.approx(0.5)

    def test_get_walks_prefix_sums(self):
        tree = SumTree(4)
        for i, p in enumerate([1.0, 2.0, 3.0, 4.0]):
            tree.update(i, p)
        # prefix boundaries: [0,1], (1,3], (3,6], (6,10]
        assert tree.get(0.5) == 0
        assert tree.get(1.0) == 0
        assert tree.get(1.01) == 1
        assert tree.get(3.0) == 1
        assert tree.get(5.99) == 2
        assert tree.get(9.5) == 3

    def test_exhaustive_against_searchsorted(self):
        rng = np.random.default_rng(7)
        values = rng.random(16) + 0.01
        tree = SumTree(16)
        for i, v in enumerate(values):
            tree.update(i, v)
        cum = np.cumsum(values)
        for u in rng.random(500) * cum[-1]:
            assert tree.get(u) == int(np.searchsorted(cum, u, side="left"))

    def test_rejects_nonpositive_capacity(self):
        with pytest.raises(ValueError):
            SumTree(0)


class TestPrioritizedBuffer:
    def test_first_push_gets_priority_one(self):
        buf = PrioritizedBuffer(8)
        buf.push("a")
        assert buf.priorities[0] == pytest.approx(1.0)
        assert buf.max_priority == pytest.approx(1.0)

    def test_new_items_get_running_max_priority(self):
        buf = PrioritizedBuffer(8)
        h = buf.push("a")
        buf.update_priorities([h], [4.0])
        buf.push("b")
        assert buf.priorities[1] == pytest.approx(4.0 + buf.eps_p)

    def test_fifo_eviction(self):
        buf = PrioritizedBuffer(3)
        for name in "abcd":
            buf.push(name)
        assert len(buf) == 3
        assert sorted(buf.items) == ["b", "c", "d"]
        # the evicted slot's priority was replaced, not accumulated
        assert buf.tree.total() == pytest.approx(
            np.sum(buf.priorities[:3] ** buf.alpha))

    def test_priority_floor(self):
        buf = PrioritizedBuffer(4)
        h = buf.push("a")
        buf.update_priorities([h], [0.0])
        assert buf.priorities[0] == pytest.approx(1e-3)
        assert buf.tree.total() > 0

    def test_array_delta_collapses_to_mean_abs(self):
        buf = PrioritizedBuffer(4)
        h = buf.push("a")
        buf.update_priorities([h], [np.array([1.0, -3.0, 2.0])])
        assert buf.priorities[0] == pytest.approx(2.0 + 1e-3)

    def test_proportional_sampling_alpha_one(self):
        # priorities [1, 3] at alpha=1 must sample [0.25, 0.75] +- 0.01
        buf = PrioritizedBuffer(4, alpha=1.0)
        buf.update_priorities([buf.push("a"), buf.push("b")], [
            1.0 - buf.eps_p, 3.0 - buf.eps_p])
        rng = np.random.default_rng(0)
        counts = np.zeros(2)
        _, idxs, _ = buf.sample(100_000, rng, beta=1.0)
        for i in idxs:
            counts[i] += 1
        freqs = counts / counts.sum()
        assert abs(freqs[0] - 0.25) < 0.01
        assert abs(freqs[1] - 0.75) < 0.01

    def test_alpha_zero_is_uniform(self):
        buf = PrioritizedBuffer(4, alpha=0.0)
        buf.update_priorities([buf.push("a"), buf.push("b")], [0.1, 9.0])
        rng = np.random.default_rng(1)
        _, idxs, _ = buf.sample(50_000, rng)
        freq0 = np.mean(idxs == 0)
        assert abs(freq0 - 0.5) < 0.01

    def test_alpha_exponent_applied(self):
        buf = PrioritizedBuffer(4, alpha=0.5)
        buf.update_priorities([buf.push("a"), buf.push("b")], [
            1.0 - buf.eps_p, 4.0 - buf.eps_p])
        rng = np.random.default_rng(2)
        _, idxs, _ = buf.sample(60_000, rng)
        # p^0.5 = [1, 2] -> probs [1/3, 2/3]
        assert abs(np.mean(idxs == 1) - 2 / 3) < 0.01

    def test_uniform_priorities_beta_one_gives_unit_weights(self):
        buf = PrioritizedBuffer(8)
        for name in "abcde":
            buf.push(name)
        rng = np.random.default_rng(3)
        _, _, weights = buf.sample(64, rng, beta=1.0)
        assert np.allclose(weights, 1.0)

    def test_weights_compensate_oversampling(self):
        buf = PrioritizedBuffer(4, alpha=1.0)
        buf.update_priorities([buf.push("a"), buf.push("b")], [
            1.0 - buf.eps_p, 3.0 - buf.eps_p])
        rng = np.random.default_rng(4)
        _, idxs, weights = buf.sample(10_000, rng, beta=1.0)
        # w_i ∝ 1/P(i), normalized so the rarest item has weight 1
        assert np.allclose(weights[idxs == 0], 1.0)
        assert np.allclose(weights[idxs == 1], 1 / 3)

    def test_beta_zero_neutralizes_weights(self):
        buf = PrioritizedBuffer(4, alpha=1.0)
        buf.update_priorities([buf.push("a"), buf.push("b")], [0.2, 5.0])
        rng = np.random.default_rng(5)
        _, _, weights = buf.sample(100, rng, beta=0.0)
        assert np.allclose(weights, 1.0)

    def test_update_priorities_shifts_distribution(self):
        buf = PrioritizedBuffer(4, alpha=1.0)
        ha = buf.push("a")
        hb = buf.push("b")
        buf.update_priorities([ha, hb], [1.0 - buf.eps_p, 1.0 - buf.eps_p])
        buf.update_priorities([hb], [9.0 - buf.eps_p])
        rng = np.random.default_rng(6)
        _, idxs, _ = buf.sample(50_000, rng)
        assert abs(np.mean(idxs == 1) - 0.9) < 0.01

    def test_sample_empty_raises(self):
        with pytest.raises(ValueError):
            PrioritizedBuffer(4).sample(1, np.random.default_rng(0))

    def test_handles_stay_valid_across_eviction(self):
        buf = PrioritizedBuffer(2)
        buf.push("a")
        buf.push("b")
        h = buf.push("c")          # evicts "a", lands in slot 0
        assert h == 0
        assert buf.items[h] == "c"


class TestEpisodeRecord:
    def test_valid_episode_passes(self):
        make_episode().validate(ActionSpace(31))

    def test_terminal_must_be_last_only(self):
        ep = make_episode()
        ep.steps[0].terminal = True
        with pytest.raises(ValueError, match="terminal"):
            ep.validate()

    def test_must_open_verbal(self):
        ep = make_episode()
        ep.steps[0].mask = ActionMask.SLOT_ONLY
        ep.steps[0].action = 32
        with pytest.raises(ValueError, match="verbal"):
            ep.validate()

    def test_slot_hands_back_to_verbal(self):
        ep = make_episode()
        ep.steps[2].mask = ActionMask.SLOT_ONLY
        with pytest.raises(ValueError, match="alternation"):
            ep.validate()

    def test_question_must_lead_to_slot(self):
        actions = ActionSpace(31)
        steps = [
            make_step(0, ActionMask.VERBAL_ONLY),
            make_step(1, ActionMask.VERBAL_ONLY),  # question then verbal: bad
            make_step(31, ActionMask.VERBAL_ONLY, terminal=True),
        ]
        ep = EpisodeRecord(steps=steps, outcome="loss", goal_target="x")
        with pytest.raises(ValueError, match="alternation"):
            ep.validate(actions)
        ep.validate()  # structural-only check cannot see action kinds

    def test_wrong_guess_keeps_verbal_floor(self):
        actions = ActionSpace(31)
        steps = [
            make_step(31, ActionMask.VERBAL_ONLY, reward=-5.0),
            make_step(31, ActionMask.VERBAL_ONLY, terminal=True, reward=30.0),
        ]
        EpisodeRecord(steps=steps, outcome="win", goal_target="x").validate(actions)

    def test_empty_and_bad_outcome(self):
        with pytest.raises(ValueError, match="empty"):
            EpisodeRecord(steps=[], outcome="win", goal_target="x").validate()
        with pytest.raises(ValueError, match="outcome"):
            make_episode().__class__(steps=make_episode().steps,
                                     outcome="draw", goal_target="x").validate()

    def test_json_round_trip(self):
        ep = make_episode()
        clone = EpisodeRecord.from_jsonable(ep.to_jsonable())
        assert clone == ep
        assert clone.steps[1].slot_label is Intent.YES

    def test_feature_cache_not_serialized_or_compared(self):
        ep = make_episode()
        ep.feature_cache = np.ones((3, 5))
        assert "feature_cache" not in ep.to_jsonable()
        assert ep == EpisodeRecord.from_jsonable(ep.to_jsonable())


class TestSnapshots:
    def test_episode_buffer_round_trip(self, tmp_path):
        buf = PrioritizedBuffer(8, alpha=0.7, eps_p=1e-2)
        handles = [buf.push(make_episode(tag)) for tag in "abc"]
        buf.update_priorities(handles[:2], [0.5, 2.0])
        save_episode_buffer(buf, tmp_path / "snap")
        clone = load_episode_buffer(tmp_path / "snap")
        assert len(clone) == 3
        assert clone.alpha == 0.7 and clone.eps_p == 1e-2
        assert np.allclose(clone.priorities[:3], buf.priorities[:3])
        assert clone.tree.total() == pytest.approx(buf.tree.total())
        assert clone.max_priority == pytest.approx(buf.max_priority)
        assert [e.goal_target for e in clone.items[:3]] == ["a", "b", "c"]

    def test_synthetic_buffer_round_trip(self, tmp_path):
        buf = PrioritizedBuffer(16)
        rng = np.random.default_rng(0)
        for i in range(5):
            buf.push(SyntheticTransition(b=rng.normal(size=4), a_h=Intent(i % 3),
                                         r=float(i), b_next=rng.normal(size=4),
                                         terminal=(i == 4)))
        save_synthetic_buffer(buf, tmp_path / "snap")
        clone = load_synthetic_buffer(tmp_path / "snap")
        assert len(clone) == 5
        for a, b in zip(clone.items[:5], buf.items[:5]):
            assert np.array_equal(a.b, b.b)
            assert np.array_equal(a.b_next, b.b_next)
            assert a.a_h is b.a_h and a.r == b.r and a.terminal == b.terminal
            assert a.next_mask is ActionMask.VERBAL_ONLY

    def test_sampling_agrees_after_reload(self, tmp_path):
        buf = PrioritizedBuffer(8, alpha=1.0)
        hs = [buf.push(make_episode(t)) for t in "ab"]
        buf.update_priorities(hs, [1.0, 3.0])
        save_episode_buffer(buf, tmp_path / "snap")
        clone = load_episode_buffer(tmp_path / "snap")
        a = buf.sample(100, np.random.default_rng(9))[1]
        b = clone.sample(100, np.random.default_rng(9))[1]
        assert np.array_equal(a, b)
