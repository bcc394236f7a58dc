"""Analysis suite: P/R bookkeeping, the ridge probe, cosine-KNN retrieval
error, and learning-curve extraction."""

import json

import numpy as np
import pytest

from twentyq.analysis import (
    BeliefSamples,
    SlotConfusion,
    analysis_tables,
    analyze_run,
    collect_belief_samples,
    learning_curves,
    list_checkpoints,
    merge_learning_curves,
    precision_recall,
    probe_guess_count,
    r_squared,
    retrieval_error,
    ridge_fit,
    ridge_predict,
    slot_pairs_from_records,
)
from twentyq.persona_db import Intent
from twentyq.trainer import TrainConfig, Trainer, load_world, train


@pytest.fixture(scope="module")
def world():
    return load_world(TrainConfig())


def samples_from(h, latent, guesses=None):
    n = len(h)
    return BeliefSamples(h=np.asarray(h, dtype=np.float64),
                         latent=np.asarray(latent, dtype=np.int8),
                         guesses=np.asarray(
                             guesses if guesses is not None else np.zeros(n),
                             dtype=np.int64),
                         episode=np.zeros(n, dtype=np.int64))


class TestPrecisionRecall:
    def test_hand_pairs(self):
        Y, N, U = Intent.YES, Intent.NO, Intent.UNKNOWN
        out = precision_recall([(Y, Y), (Y, N), (N, N), (U, N)])
        assert out["yes"]["precision"] == pytest.approx(0.5)
        assert out["yes"]["recall"] == pytest.approx(1.0)
        assert out["no"]["precision"] == pytest.approx(1.0)
        assert out["no"]["recall"] == pytest.approx(1 / 3)
        assert out["no"]["support"] == 3
        assert out["unknown"]["precision"] == 0.0
        assert out["unknown"]["recall"] is None    # class never appears
        assert out["unknown"]["f1"] is None
        assert out["accuracy"] == pytest.approx(0.5)

    def test_hand_confusion_matrix(self):
        # rows predicted, columns true; same counts as test_hand_pairs
        counts = [[1, 1, 0], [0, 1, 0], [0, 1, 0]]
        assert precision_recall(counts) == precision_recall(
            SlotConfusion(np.array(counts)))
        out = precision_recall(np.array(counts))
        assert out["yes"]["precision"] == pytest.approx(0.5)
        assert out["no"]["recall"] == pytest.approx(1 / 3)

    def test_diagonal_confusion_is_perfect(self):
        out = precision_recall(np.diag([4, 5, 6]))
        for name in ("yes", "no", "unknown"):
            assert out[name]["precision"] == 1.0
            assert out[name]["recall"] == 1.0
            assert out[name]["f1"] == 1.0
        assert out["accuracy"] == 1.0

    def test_recall_weighted_by_support_equals_trace(self):
        rng = np.random.default_rng(0)
        counts = rng.integers(0, 20, size=(3, 3))
        out = precision_recall(counts)
        acc = sum(out[name]["recall"] * out[name]["support"]
                  for name in ("yes", "no", "unknown"))
        assert acc == pytest.approx(np.trace(counts))

    def test_empty_pairs_all_undefined(self):
        out = precision_recall([])
        assert out["accuracy"] is None
        assert out["yes"]["precision"] is None
        assert out["yes"]["recall"] is None

    def test_confusion_validation(self):
        with pytest.raises(ValueError, match="3x3"):
            SlotConfusion(np.zeros((2, 3)))
        with pytest.raises(ValueError, match="non-negative"):
            SlotConfusion(np.array([[1, 0, 0], [0, -1, 0], [0, 0, 1]]))

    def test_from_pairs_total(self):
        pairs = [(Intent.YES, Intent.NO)] * 7
        conf = SlotConfusion.from_pairs(pairs)
        assert conf.total == 7
        assert conf.counts[0, 1] == 7

    def test_pairs_from_records(self, world):
        t = Trainer(TrainConfig.desk(total_steps=400, eval_every=200,
                                     eval_episodes=2),
                    "/tmp/twentyq-test-pairs")
        records = [t.rollout() for _ in range(3)]
        pairs = slot_pairs_from_records(records, world.actions)
        n_slot = sum(1 for r in records for s in r.steps
                     if s.slot_label is not None
                     and s.mask.value == "slot")
        assert len(pairs) == n_slot
        assert all(isinstance(p, Intent) and isinstance(q, Intent)
                   for p, q in pairs)


class TestRidgeProbe:
    def test_hand_solution(self):
        # X=[[1],[2]], y=[1,2], lam=1: w = (2/3, 1/3), frozen by hand
        w = ridge_fit(np.array([[1.0], [2.0]]), np.array([1.0, 2.0]), lam=1.0)
        assert w == pytest.approx([2 / 3, 1 / 3])

    def test_normal_equations_stationarity(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(40, 7))
        y = rng.normal(size=40)
        lam = 1.0
        w = ridge_fit(X, y, lam)
        Xb = np.hstack([X, np.ones((40, 1))])
        grad = 2 * (Xb.T @ (Xb @ w - y) + lam * w)
        assert np.allclose(grad, 0.0, atol=1e-9)

    def test_r_squared_conventions(self):
        y = np.array([1.0, 2.0, 3.0])
        assert r_squared(y, y) == pytest.approx(1.0)
        assert r_squared(y, np.full(3, y.mean())) == pytest.approx(0.0)
        assert r_squared(np.full(3, 5.0), np.array([4.0, 5.0, 6.0])) == 0.0

    def test_probe_recovers_linear_structure(self):
        rng = np.random.default_rng(1)
        h = rng.normal(size=(400, 16))
        g = (h @ rng.normal(size=16) + 5).round().clip(0, 10)
        out = probe_guess_count(samples_from(h, np.zeros((400, 1)), g))
        assert out["r2"] > 0.9
        assert out["n_train"] == 320 and out["n_test"] == 80

    def test_probe_flat_on_noise(self):
        rng = np.random.default_rng(2)
        h = rng.normal(size=(400, 16))
        g = rng.integers(0, 10, size=400)
        out = probe_guess_count(samples_from(h, np.zeros((400, 1)), g))
        assert out["r2"] < 0.1

    def test_train_at_least_test_unregularized(self):
        # holds on average over splits: each split's r2 is normalized by its
        # own target variance, so single splits can flip the sign
        rng = np.random.default_rng(7)
        h = rng.normal(size=(200, 12))
        g = h @ rng.normal(size=12) + rng.normal(size=200)
        s = samples_from(h, np.zeros((200, 1)), g)
        outs = [probe_guess_count(s, lam=0.0, seed=k) for k in range(20)]
        assert np.mean([o["r2_train"] - o["r2"] for o in outs]) >= 0.0

    def test_probe_constant_target_is_zero(self):
        rng = np.random.default_rng(3)
        h = rng.normal(size=(50, 4))
        out = probe_guess_count(samples_from(h, np.zeros((50, 1)),
                                             np.full(50, 7)))
        assert out["r2"] == 0.0

    def test_split_is_seeded(self):
        rng = np.random.default_rng(4)
        h = rng.normal(size=(100, 8))
        g = rng.integers(0, 10, size=100)
        s = samples_from(h, np.zeros((100, 1)), g)
        assert probe_guess_count(s, seed=9) == probe_guess_count(s, seed=9)
        assert (probe_guess_count(s, seed=9)["r2"]
                != probe_guess_count(s, seed=10)["r2"])


def unit(theta_deg):
    t = np.deg2rad(theta_deg)
    return [np.cos(t), np.sin(t)]


class TestRetrievalError:
    def test_six_sample_fixture_k5(self):
        # with k = n-1 every other sample is a neighbor; geometry drops out
        h = [unit(a) for a in (0, 30, 60, 90, 120, 150)]
        labels = [[0], [0], [0], [1], [1], [2]]
        out = retrieval_error(samples_from(h, labels), k=5)
        assert out["mean"] == pytest.approx((3 * 3 / 5 + 2 * 4 / 5 + 1.0) / 6)
        assert out["per_slot"] == [out["mean"]]

    def test_six_sample_fixture_k2_clusters(self):
        h = [unit(a) for a in (0, 10, 20, 120, 130, 140)]
        same = [[0], [0], [0], [1], [1], [1]]
        out = retrieval_error(samples_from(h, same), k=2)
        assert out["mean"] == pytest.approx(0.0)
        mixed = [[0], [1], [0], [1], [0], [1]]
        out = retrieval_error(samples_from(h, mixed), k=2)
        assert out["mean"] == pytest.approx(4 / 6)

    def test_identical_latents_score_zero(self):
        rng = np.random.default_rng(8)
        h = rng.normal(size=(30, 6))
        out = retrieval_error(samples_from(h, np.full((30, 4), 2)), k=5)
        assert out["per_slot"] == [0.0] * 4

    def test_multi_slot_reported_separately(self):
        h = [unit(a) for a in (0, 10, 120, 130)]
        labels = [[0, 0], [0, 1], [1, 0], [1, 1]]
        out = retrieval_error(samples_from(h, labels), k=1)
        # slot 0 agrees within clusters, slot 1 never does
        assert out["per_slot"][0] == pytest.approx(0.0)
        assert out["per_slot"][1] == pytest.approx(1.0)
        assert out["mean"] == pytest.approx(0.5)

    def test_random_labels_near_three_quarters(self):
        rng = np.random.default_rng(5)
        h = rng.normal(size=(800, 16))
        labels = rng.integers(0, 4, size=(800, 3))
        out = retrieval_error(samples_from(h, labels), k=5)
        assert out["mean"] == pytest.approx(0.75, abs=0.03)

    def test_chunking_invariant(self):
        rng = np.random.default_rng(6)
        h = rng.normal(size=(50, 8))
        labels = rng.integers(0, 4, size=(50, 2))
        s = samples_from(h, labels)
        a = retrieval_error(s, k=5, chunk=7)
        b = retrieval_error(s, k=5, chunk=1000)
        assert a["per_slot"] == pytest.approx(b["per_slot"], abs=1e-12)

    def test_sample_order_invariant(self):
        rng = np.random.default_rng(9)
        h = rng.normal(size=(60, 8))
        labels = rng.integers(0, 4, size=(60, 2))
        perm = rng.permutation(60)
        a = retrieval_error(samples_from(h, labels), k=5)
        b = retrieval_error(samples_from(h[perm], labels[perm]), k=5)
        assert a["per_slot"] == pytest.approx(b["per_slot"], abs=1e-12)

    def test_requires_enough_samples(self):
        h = np.eye(4)
        with pytest.raises(ValueError, match="samples"):
            retrieval_error(samples_from(h, np.zeros((4, 1))), k=5)


class TestCollectBeliefs:
    def test_shapes_and_ranges(self, world):
        t = Trainer(TrainConfig.desk(total_steps=400, eval_every=200),
                    "/tmp/twentyq-test-collect")
        samples = collect_belief_samples(t.net, world, 60,
                                         np.random.default_rng(0))
        assert samples.h.shape == (60, 64)
        assert samples.latent.shape == (60, 10)
        assert samples.guesses.shape == (60,)
        assert len(samples) == 60
        assert samples.guesses.min() >= 0 and samples.guesses.max() <= 10
        assert samples.guesses[0] == 0     # nothing spent at the first turn
        assert set(np.unique(samples.latent)) <= {0, 1, 2, 3}
        assert np.all(np.diff(samples.episode) >= 0)

    def test_deterministic_given_rng(self, world):
        t = Trainer(TrainConfig.desk(total_steps=400, eval_every=200),
                    "/tmp/twentyq-test-collect2")
        a = collect_belief_samples(t.net, world, 40, np.random.default_rng(1))
        b = collect_belief_samples(t.net, world, 40, np.random.default_rng(1))
        assert np.array_equal(a.h, b.h)
        assert np.array_equal(a.latent, b.latent)


def write_metrics(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")


def eval_row(steps, win, phase="rl"):
    return {"phase": phase, "env_steps": steps, "updates": steps // 4,
            "win_rate": win, "avg_turns": 30.0, "avg_raw_return": -20.0,
            "loss_mean": 2.0}


class TestLearningCurves:
    def test_series_and_gaps(self, tmp_path):
        rows = [eval_row(1000, 0.1), eval_row(2000, 0.2),
                eval_row(3000, 0.5), eval_row(6000, 0.6)]
        rows[1]["loss_mean"] = None
        path = tmp_path / "metrics.jsonl"
        write_metrics(path, rows)
        out = learning_curves(path)
        assert out["env_steps"] == [1000, 2000, 3000, 6000]
        assert out["win_rate"] == [0.1, 0.2, 0.5, 0.6]
        assert out["loss_mean"][1] is None
        assert out["gaps"] == [(3000, 6000)]

    def test_phase_filter_skips_tracker_rows(self, tmp_path):
        rows = [
            {"phase": "tracker", "env_steps": 500, "updates": 5,
             "ce_loss": 1.0, "tracker_accuracy": 0.5},
            eval_row(1000, 0.3, phase="baseline"),
        ]
        path = tmp_path / "metrics.jsonl"
        write_metrics(path, rows)
        out = learning_curves(path, phase="baseline")
        assert out["env_steps"] == [1000]
        assert out["gaps"] == []

    def test_merge_aligns_regimes_with_gap_markers(self, tmp_path):
        a = tmp_path / "a.jsonl"
        b = tmp_path / "b.jsonl"
        write_metrics(a, [eval_row(1000, 0.1), eval_row(2000, 0.2)])
        write_metrics(b, [eval_row(1000, 0.3), eval_row(3000, 0.7)])
        out = merge_learning_curves({"rl": a, "hybrid": b})
        assert out["env_steps"] == [1000, 2000, 3000]
        assert out["win_rate"]["rl"] == [0.1, 0.2, None]
        assert out["win_rate"]["hybrid"] == [0.3, None, 0.7]

    def test_merge_single_log_passthrough(self, tmp_path):
        a = tmp_path / "a.jsonl"
        write_metrics(a, [eval_row(1000, 0.1), eval_row(2000, 0.2)])
        out = merge_learning_curves({"rl": a})
        assert out["env_steps"] == [1000, 2000]
        assert out["win_rate"]["rl"] == [0.1, 0.2]


@pytest.mark.slow
class TestAnalyzeRun:
    def test_end_to_end(self, tmp_path):
        cfg = TrainConfig.desk("rl", seed=0, total_steps=400, eval_every=200,
                               eval_episodes=4, batch_size=8,
                               buffer_capacity=100, target_sync=20)
        run_dir = tmp_path / "run"
        train(cfg, run_dir)
        ckpts = list_checkpoints(run_dir)
        assert ckpts[-1].name == "ckpt_final"
        assert len(ckpts) >= 2
        doc = analyze_run(run_dir, n_samples=80, seed=0)
        assert (run_dir / "analysis.json").exists()
        assert len(doc["checkpoints"]) == len(ckpts)
        first = doc["checkpoints"][0]
        assert "r2" in first["probe"]
        assert "mean" in first["retrieval"]
        assert "yes" in first["slot_metrics"]
        assert np.array(first["slot_confusion"]).shape == (3, 3)
        assert doc["curves"]["env_steps"]

        tables = analysis_tables(doc)
        for name in ("probe.csv", "retrieval.csv", "slots.csv", "curves.csv"):
            assert (run_dir / "tables" / name).read_text() == tables[name]
        probe_lines = tables["probe.csv"].strip().splitlines()
        assert probe_lines[0].startswith("checkpoint,env_steps,r2")
        assert len(probe_lines) == 1 + len(ckpts)
        assert len(tables["slots.csv"].strip().splitlines()) == \
            1 + 3 * len(ckpts)
