"""Skeleton-trajectory data types, joint-subset selection, normalization,
and the trajectory JSONL codec.

A trajectory is an action clip: ``alpha`` frames of ``joint_count`` 2D
keypoints. Frames are stored as one float64 array of shape
``(alpha, joint_count, 2)``; a single frame is the ``(joint_count, 2)`` row.
Coordinates are normalized image coordinates in [0, 1] by convention, but
only finiteness is enforced so raw-pixel data passes through untouched.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidJointSet, InvalidTrajectory


@dataclass(frozen=True)
class JointSet:
    """Named, ordered subset of joint indices.

    Indices must be non-negative, strictly increasing and non-empty.
    """

    name: str
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise InvalidJointSet(f"joint set {self.name!r} is empty")
        for i in idx:
            if i < 0:
                raise InvalidJointSet(f"joint set {self.name!r}: negative index {i}")
        for a, b in zip(idx, idx[1:]):
            if b <= a:
                raise InvalidJointSet(
                    f"joint set {self.name!r}: indices must be strictly increasing "
                    f"(saw {a} before {b})"
                )
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)


# Documented presets. The canonical 40-joint hand layout orders the thumb and
# index chains first, so its active subset is the leading 18 indices. The
# 21-landmark layout is the common single-hand estimator convention (wrist,
# then thumb 1-4, index 5-8, remaining fingers); its active subset is
# wrist + thumb + index.
JOINT_PRESETS: dict[str, JointSet] = {
    "full-40": JointSet("full-40", tuple(range(40))),
    "active-18": JointSet("active-18", tuple(range(18))),
    "hand-21": JointSet("hand-21", tuple(range(21))),
    "hand-21-active": JointSet("hand-21-active", tuple(range(9))),
}

NORMALIZE_MODES = ("none", "anchor_scale")


@dataclass
class Trajectory:
    """One action clip with optional class label and frame rate.

    ``frames`` has shape ``(alpha, joint_count, 2)``, dtype float64.
    """

    id: str
    frames: np.ndarray
    label: str | None = None
    fps: float | None = None

    def __post_init__(self):
        arr = np.asarray(self.frames, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise InvalidTrajectory(
                f"trajectory {self.id!r}: frames must have shape (alpha, joints, 2), "
                f"got {arr.shape}"
            )
        if arr.shape[0] < 1:
            raise InvalidTrajectory(f"trajectory {self.id!r}: needs at least one frame")
        if arr.shape[1] < 1:
            raise InvalidTrajectory(f"trajectory {self.id!r}: needs at least one joint")
        if not np.isfinite(arr).all():
            raise InvalidTrajectory(f"trajectory {self.id!r}: non-finite coordinate")
        if self.fps is not None:
            fps = float(self.fps)
            if not (math.isfinite(fps) and fps > 0):
                raise InvalidTrajectory(f"trajectory {self.id!r}: fps must be positive, got {self.fps}")
            self.fps = fps
        self.frames = arr

    @property
    def alpha(self) -> int:
        """Frame count of the action."""
        return self.frames.shape[0]

    @property
    def joint_count(self) -> int:
        return self.frames.shape[1]


def select_joints(traj: Trajectory, joints: JointSet) -> Trajectory:
    """Keep only the joints named by ``joints``, preserving their order.

    Raises :class:`InvalidJointSet` naming the first offending index if any
    index is out of range for the trajectory.
    """
    for i in joints.indices:
        if i >= traj.joint_count:
            raise InvalidJointSet(
                f"joint index {i} out of range for {traj.joint_count}-joint "
                f"trajectory {traj.id!r}"
            )
    frames = traj.frames[:, list(joints.indices), :].copy()
    return Trajectory(traj.id, frames, traj.label, traj.fps)


def normalize(traj: Trajectory, mode: str = "none") -> Trajectory:
    """Normalize coordinates per frame.

    ``none`` returns the trajectory unchanged. ``anchor_scale`` subtracts
    joint 0 (the anchor, wrist by convention) from every joint of the frame
    and divides by the frame's bounding-box diagonal. Frames whose points all
    coincide have a zero diagonal and map every joint to (0, 0) instead of
    erroring; real trackers do emit such frames.
    """
    if mode == "none":
        return traj
    if mode != "anchor_scale":
        raise ValueError(f"unknown normalize mode {mode!r}")
    anchors = traj.frames[:, :1, :]
    shifted = traj.frames - anchors
    spans = traj.frames.max(axis=1) - traj.frames.min(axis=1)  # (alpha, 2)
    diag = np.sqrt((spans ** 2).sum(axis=1))  # (alpha,)
    out = np.zeros_like(shifted)
    live = diag > 0.0
    out[live] = shifted[live] / diag[live, None, None]
    return Trajectory(traj.id, out, traj.label, traj.fps)


def encode_frames(traj: Trajectory) -> np.ndarray:
    """Flatten each frame row-major to ``[x0, y0, x1, y1, ...]``.

    Returns an ``(alpha, 2 * joint_count)`` float64 array.
    """
    return traj.frames.reshape(traj.alpha, -1).copy()


# ---------------------------------------------------------------------------
# JSONL codec
#
# One trajectory per line:
#   {"id": str, "label": str|null, "fps": number|null, "joints": J,
#    "frames": [[[x, y], ...J] ...alpha]}
# Floats serialize via repr, which round-trips 64-bit values exactly.
# ---------------------------------------------------------------------------


def trajectory_to_record(traj: Trajectory) -> dict:
    return {
        "id": traj.id,
        "label": traj.label,
        "fps": traj.fps,
        "joints": traj.joint_count,
        "frames": traj.frames.tolist(),
    }


def trajectory_from_record(record: dict, where: str = "") -> Trajectory:
    ctx = f" ({where})" if where else ""
    if not isinstance(record, dict):
        raise InvalidTrajectory(f"expected a JSON object{ctx}")
    try:
        traj_id = record["id"]
        joints = record["joints"]
        frames = record["frames"]
    except KeyError as exc:
        raise InvalidTrajectory(f"missing field {exc}{ctx}") from None
    label = record.get("label")
    fps = record.get("fps")
    if not isinstance(traj_id, str):
        raise InvalidTrajectory(f"id must be a string{ctx}")
    if label is not None and not isinstance(label, str):
        raise InvalidTrajectory(f"label must be a string or null{ctx}")
    try:
        arr = np.asarray(frames, dtype=np.float64)
    except (ValueError, TypeError):
        raise InvalidTrajectory(f"trajectory {traj_id!r}: ragged or non-numeric frames{ctx}") from None
    traj = Trajectory(traj_id, arr, label, fps)
    if traj.joint_count != joints:
        raise InvalidTrajectory(
            f"trajectory {traj_id!r}: declared {joints} joints but frames carry "
            f"{traj.joint_count}{ctx}"
        )
    return traj


def dump_jsonl(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, separators=(",", ":"), allow_nan=False) + "\n" for r in records)


def write_atomic(path: str | Path, data: str | bytes) -> None:
    """Write via a temp file in the same directory plus an atomic rename."""
    path = Path(path)
    binary = isinstance(data, bytes)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb" if binary else "w", encoding=None if binary else "utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_trajectories(path: str | Path, trajs: Iterable[Trajectory]) -> int:
    records = [trajectory_to_record(t) for t in trajs]
    write_atomic(path, dump_jsonl(records))
    return len(records)


def read_trajectories(path: str | Path) -> list[Trajectory]:
    trajs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidTrajectory(f"{path}:{lineno}: invalid JSON: {exc}") from None
            trajs.append(trajectory_from_record(record, where=f"{path}:{lineno}"))
    return trajs
