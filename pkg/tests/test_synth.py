import numpy as np
import pytest

from skelwin.filtering import FilterPolicy, filter_candidates
from skelwin.synth import (
    BenchmarkConfig,
    GestureSpec,
    gen_benchmark,
    gen_embedding_clusters,
    gen_trajectory,
)
from skelwin.trajectory import dump_jsonl, trajectory_to_record


class TestGenTrajectory:
    def test_insert_motion_law(self):
        spec = GestureSpec("insert", "insert", alpha=2, joints=1, sigma=0.0,
                           seed=0, origin=(0.2, 0.5))
        traj = gen_trajectory(spec)
        np.testing.assert_allclose(traj.frames[0], [[0.2, 0.5]], atol=1e-12)
        np.testing.assert_allclose(traj.frames[1], [[0.7, 0.5]], atol=1e-12)
        assert traj.label == "insert"

    def test_unplug_is_reverse(self):
        spec = GestureSpec("unplug", "unplug", alpha=3, joints=1, sigma=0.0,
                           seed=0, origin=(0.8, 0.5))
        traj = gen_trajectory(spec)
        np.testing.assert_allclose(traj.frames[-1], [[0.3, 0.5]], atol=1e-12)

    def test_idle_frames_identical(self):
        spec = GestureSpec("idle", "idle", alpha=10, joints=4, sigma=0.0, seed=1)
        traj = gen_trajectory(spec)
        for f in range(1, 10):
            np.testing.assert_array_equal(traj.frames[f], traj.frames[0])

    def test_deterministic(self):
        spec = GestureSpec("insert", "insert", alpha=20, joints=5, sigma=0.05, seed=42)
        a = gen_trajectory(spec)
        b = gen_trajectory(spec)
        assert a.frames.tobytes() == b.frames.tobytes()
        assert a.id == b.id

    def test_coordinates_stay_in_unit_square(self):
        for seed in range(5):
            spec = GestureSpec("insert", "insert", alpha=50, joints=8, sigma=0.1, seed=seed)
            traj = gen_trajectory(spec)
            assert traj.frames.min() >= 0.0
            assert traj.frames.max() <= 1.0

    def test_anchor_is_origin(self):
        spec = GestureSpec("idle", "idle", alpha=1, joints=6, sigma=0.0,
                           seed=0, origin=(0.4, 0.6))
        traj = gen_trajectory(spec)
        np.testing.assert_allclose(traj.frames[0, 0], [0.4, 0.6], atol=1e-15)

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            GestureSpec("x", "wave", alpha=1, joints=1, sigma=0.0, seed=0)
        with pytest.raises(ValueError):
            GestureSpec("x", "idle", alpha=0, joints=1, sigma=0.0, seed=0)


class TestGenBenchmark:
    def test_counts_and_balance(self):
        train, test = gen_benchmark(BenchmarkConfig(n_train=30, n_test=12, seed=3))
        assert len(train) == 30
        assert len(test) == 12
        labels = {t.label for t in train}
        assert labels == {"insert", "unplug", "idle"}
        counts = {l: sum(1 for t in train if t.label == l) for l in labels}
        assert set(counts.values()) == {10}

    def test_two_class_config(self):
        train, _ = gen_benchmark(BenchmarkConfig(n_train=10, n_test=4, n_classes=2, seed=3))
        assert {t.label for t in train} == {"insert", "unplug"}

    def test_alpha_range_respected(self):
        train, test = gen_benchmark(BenchmarkConfig(n_train=40, n_test=10, seed=5))
        for t in train + test:
            assert 60 <= t.alpha <= 140

    def test_byte_level_determinism(self):
        a_train, a_test = gen_benchmark(BenchmarkConfig(n_train=15, n_test=6, seed=9))
        b_train, b_test = gen_benchmark(BenchmarkConfig(n_train=15, n_test=6, seed=9))
        a_bytes = dump_jsonl(trajectory_to_record(t) for t in a_train + a_test)
        b_bytes = dump_jsonl(trajectory_to_record(t) for t in b_train + b_test)
        assert a_bytes == b_bytes


class TestGenEmbeddingClusters:
    def test_shapes_and_labels(self):
        templates, candidates = gen_embedding_clusters(dim=16, n_in=20, n_out=30, seed=0)
        assert len(templates) == 10
        assert all(t.dim == 16 for t in templates)
        assert sum(1 for c in candidates if c.label == "in") == 20
        assert sum(1 for c in candidates if c.label == "out") == 30

    def test_deterministic(self):
        a = gen_embedding_clusters(dim=8, n_in=10, n_out=10, seed=4)
        b = gen_embedding_clusters(dim=8, n_in=10, n_out=10, seed=4)
        assert [e.vec for e in a[0]] == [e.vec for e in b[0]]
        assert [e.id for e in a[1]] == [e.id for e in b[1]]

    def test_huge_separation_perfectly_filterable(self):
        templates, candidates = gen_embedding_clusters(
            dim=32, n_in=500, n_out=500, separation=10.0, seed=7
        )
        report = filter_candidates(templates, candidates, FilterPolicy(threshold=0.0))
        accepted = set(report.accepted)
        positives = {c.id for c in candidates if c.label == "in"}
        tp = len(accepted & positives)
        assert tp / len(accepted) == 1.0  # precision
        assert tp / len(positives) == 1.0  # recall

    def test_zero_separation_indistinguishable(self):
        # precision should sit near the 0.5 prior; allow 3-sigma binomial slack
        templates, candidates = gen_embedding_clusters(
            dim=32, n_in=500, n_out=500, separation=0.0, seed=11
        )
        report = filter_candidates(templates, candidates, FilterPolicy(threshold=0.0))
        accepted = set(report.accepted)
        positives = {c.id for c in candidates if c.label == "in"}
        assert len(accepted) > 50
        precision = len(accepted & positives) / len(accepted)
        sigma = 0.5 / np.sqrt(len(accepted))
        assert abs(precision - 0.5) <= 3 * sigma
