import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skelwin.errors import InvalidJointSet, InvalidTrajectory
from skelwin.trajectory import (
    JOINT_PRESETS,
    JointSet,
    Trajectory,
    encode_frames,
    normalize,
    read_trajectories,
    select_joints,
    trajectory_from_record,
    trajectory_to_record,
    write_trajectories,
)


def make_traj(frames, label=None, fps=None, traj_id="t"):
    return Trajectory(id=traj_id, frames=np.asarray(frames, dtype=np.float64), label=label, fps=fps)


class TestJointSet:
    def test_valid(self):
        js = JointSet("pair", (0, 2))
        assert len(js) == 2

    @pytest.mark.parametrize("indices", [(), (2, 1), (0, 0), (-1, 3)])
    def test_invalid(self, indices):
        with pytest.raises(InvalidJointSet):
            JointSet("bad", indices)

    def test_presets(self):
        assert len(JOINT_PRESETS["full-40"]) == 40
        assert len(JOINT_PRESETS["active-18"]) == 18
        assert len(JOINT_PRESETS["hand-21"]) == 21
        assert len(JOINT_PRESETS["hand-21-active"]) == 9
        # active sets are usable on trajectories shaped like their full sets
        assert max(JOINT_PRESETS["active-18"].indices) < 40
        assert max(JOINT_PRESETS["hand-21-active"].indices) < 21


class TestTrajectoryInvariants:
    def test_rejects_nan(self):
        with pytest.raises(InvalidTrajectory):
            make_traj([[[0.1, float("nan")]]])

    def test_rejects_empty(self):
        with pytest.raises(InvalidTrajectory):
            make_traj(np.zeros((0, 3, 2)))

    def test_rejects_bad_fps(self):
        with pytest.raises(InvalidTrajectory):
            make_traj([[[0.1, 0.2]]], fps=0)

    def test_shape_props(self):
        t = make_traj(np.zeros((5, 3, 2)))
        assert t.alpha == 5
        assert t.joint_count == 3


class TestSelectJoints:
    def test_forty_to_active_eighteen(self):
        t = make_traj(np.random.default_rng(0).uniform(size=(7, 40, 2)))
        out = select_joints(t, JOINT_PRESETS["active-18"])
        assert out.joint_count == 18
        assert out.alpha == t.alpha

    def test_identity_set_is_noop(self):
        t = make_traj(np.random.default_rng(1).uniform(size=(4, 5, 2)), label="a")
        ident = JointSet("all", tuple(range(5)))
        out = select_joints(t, ident)
        np.testing.assert_array_equal(out.frames, t.frames)
        assert out.label == "a"

    def test_manual_index_enumeration(self):
        # 3 joints, 2 frames; keep {0, 2} and check slots against the source
        t = make_traj([[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]],
                       [[7.0, 8.0], [9.0, 10.0], [11.0, 12.0]]])
        out = select_joints(t, JointSet("pick", (0, 2)))
        assert out.joint_count == 2
        np.testing.assert_array_equal(out.frames[0], [[1.0, 2.0], [5.0, 6.0]])
        np.testing.assert_array_equal(out.frames[1], [[7.0, 8.0], [11.0, 12.0]])

    def test_out_of_range_names_index(self):
        t = make_traj(np.zeros((2, 3, 2)))
        with pytest.raises(InvalidJointSet, match="7"):
            select_joints(t, JointSet("bad", (0, 7)))

    def test_identity_idempotent(self):
        t = make_traj(np.random.default_rng(2).uniform(size=(3, 4, 2)))
        ident = JointSet("all", tuple(range(4)))
        once = select_joints(t, ident)
        twice = select_joints(once, ident)
        np.testing.assert_array_equal(once.frames, twice.frames)


class TestNormalize:
    def test_none_is_identity(self):
        t = make_traj(np.random.default_rng(3).uniform(size=(4, 3, 2)))
        out = normalize(t, "none")
        np.testing.assert_array_equal(out.frames, t.frames)

    def test_degenerate_frame_maps_to_zeros(self):
        t = make_traj([[[0.5, 0.5], [0.5, 0.5]]])
        out = normalize(t, "anchor_scale")
        np.testing.assert_array_equal(out.frames, np.zeros((1, 2, 2)))

    def test_hand_computed_diagonal(self):
        # diagonal of bbox spanning (0,0)-(3,4) is 5
        t = make_traj([[[0.0, 0.0], [3.0, 4.0]]])
        out = normalize(t, "anchor_scale")
        np.testing.assert_allclose(out.frames[0], [[0.0, 0.0], [0.6, 0.8]], atol=1e-15)

    @given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6), st.integers(2, 8))
    @settings(max_examples=60, deadline=None)
    def test_anchor_zero_and_bounded(self, seed, alpha, joints):
        rng = np.random.default_rng(seed)
        t = make_traj(rng.uniform(-5, 5, size=(alpha, joints, 2)))
        out = normalize(t, "anchor_scale")
        for f in range(alpha):
            frame = out.frames[f]
            src = t.frames[f]
            degenerate = bool((src == src[0]).all())
            if degenerate:
                np.testing.assert_array_equal(frame, 0.0)
            else:
                np.testing.assert_array_equal(frame[0], [0.0, 0.0])
                assert np.abs(frame).max() <= 1.0 + 1e-12


class TestEncodeFrames:
    def test_single_frame_flattening(self):
        t = make_traj([[[1.0, 2.0], [3.0, 4.0]]])
        out = encode_frames(t)
        np.testing.assert_array_equal(out, [[1.0, 2.0, 3.0, 4.0]])

    def test_output_length_matches_alpha(self):
        t = make_traj(np.zeros((1, 2, 2)))
        assert encode_frames(t).shape == (1, 4)

    def test_two_frames_one_joint(self):
        t = make_traj([[[0.1, 0.2]], [[0.3, 0.4]]])
        np.testing.assert_array_equal(encode_frames(t), [[0.1, 0.2], [0.3, 0.4]])


coord = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@st.composite
def trajectories(draw):
    alpha = draw(st.integers(1, 6))
    joints = draw(st.integers(1, 5))
    flat = draw(
        st.lists(coord, min_size=alpha * joints * 2, max_size=alpha * joints * 2)
    )
    frames = np.array(flat, dtype=np.float64).reshape(alpha, joints, 2)
    label = draw(st.one_of(st.none(), st.sampled_from(["insert", "unplug", "idle"])))
    fps = draw(st.one_of(st.none(), st.floats(1.0, 240.0, allow_nan=False)))
    ident = draw(st.uuids()).hex
    return Trajectory(id=ident, frames=frames, label=label, fps=fps)


class TestCodec:
    @given(trajectories())
    @settings(max_examples=80, deadline=None)
    def test_round_trip_bit_exact(self, traj):
        line = json.dumps(trajectory_to_record(traj))
        back = trajectory_from_record(json.loads(line))
        assert back.id == traj.id
        assert back.label == traj.label
        assert back.fps == traj.fps
        assert back.frames.tobytes() == traj.frames.tobytes()

    def test_file_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        trajs = [
            Trajectory(f"t{k}", rng.uniform(size=(3, 2, 2)), label="insert", fps=30.0)
            for k in range(5)
        ]
        path = tmp_path / "trajs.jsonl"
        assert write_trajectories(path, trajs) == 5
        back = read_trajectories(path)
        assert len(back) == 5
        for a, b in zip(trajs, back):
            assert a.frames.tobytes() == b.frames.tobytes()

    def test_declared_joint_mismatch_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        record = {"id": "x", "label": None, "fps": None, "joints": 3,
                  "frames": [[[0.1, 0.2], [0.3, 0.4]]]}
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(InvalidTrajectory, match="declared 3"):
            read_trajectories(path)

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        record = {"id": "x", "label": None, "fps": None, "joints": 1,
                  "frames": [[[0.1, float("inf")]]]}
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(InvalidTrajectory):
            read_trajectories(path)
