"""Seeded synthetic data: gesture trajectories and clustered embeddings.

Gestures follow simple linear motion laws. ``insert`` translates the whole
hand +0.5 along x over the clip, ``unplug`` -0.5, ``idle`` stays put; every
joint additionally jitters with Gaussian noise. The laws are the simplest
dynamics that keep the three classes separable by a temporal model while
staying non-trivial under noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .filtering import Embedding
from .trajectory import Trajectory

MOTION_KINDS = ("insert", "unplug", "idle")
_DRIFT = {"insert": 0.5, "unplug": -0.5, "idle": 0.0}

# Starting boxes keep the whole motion inside [0, 1] with jitter headroom.
_ORIGIN_X = {"insert": (0.15, 0.35), "unplug": (0.65, 0.85), "idle": (0.30, 0.70)}
_ORIGIN_Y = (0.30, 0.70)
_SHAPE_RADIUS = 0.04


@dataclass(frozen=True)
class GestureSpec:
    """One synthetic action clip: class, motion law, size, noise, seed.

    ``origin`` pins the anchor joint's starting position; when ``None`` it is
    drawn from a kind-specific box so the motion stays on screen.
    """

    class_id: str
    kind: str
    alpha: int
    joints: int
    sigma: float
    seed: int
    origin: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in MOTION_KINDS:
            raise ValueError(f"motion kind must be one of {MOTION_KINDS}, got {self.kind!r}")
        if self.alpha < 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if self.joints < 1:
            raise ValueError(f"joints must be >= 1, got {self.joints}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


def _base_pose(origin: np.ndarray, joints: int) -> np.ndarray:
    """Anchor joint at the origin, remaining joints on a small ring."""
    pose = np.tile(origin, (joints, 1))
    if joints > 1:
        angles = 2.0 * np.pi * np.arange(joints - 1) / (joints - 1)
        pose[1:, 0] += _SHAPE_RADIUS * np.cos(angles)
        pose[1:, 1] += _SHAPE_RADIUS * np.sin(angles)
    return pose


def gen_trajectory(spec: GestureSpec, traj_id: str | None = None) -> Trajectory:
    """Deterministic clip for the spec: rigid linear drift plus jitter."""
    rng = np.random.default_rng(spec.seed)
    if spec.origin is not None:
        origin = np.array(spec.origin, dtype=np.float64)
    else:
        x_lo, x_hi = _ORIGIN_X[spec.kind]
        y_lo, y_hi = _ORIGIN_Y
        origin = np.array([rng.uniform(x_lo, x_hi), rng.uniform(y_lo, y_hi)])
    pose = _base_pose(origin, spec.joints)

    if spec.alpha > 1:
        progress = np.arange(spec.alpha) / (spec.alpha - 1)
    else:
        progress = np.zeros(1)
    frames = np.tile(pose, (spec.alpha, 1, 1))
    frames[:, :, 0] += _DRIFT[spec.kind] * progress[:, None]
    if spec.sigma > 0:
        frames += rng.normal(0.0, spec.sigma, frames.shape)
    np.clip(frames, 0.0, 1.0, out=frames)

    if traj_id is None:
        traj_id = f"{spec.kind}-{spec.seed & 0xFFFFFFFF:08x}"
    return Trajectory(id=traj_id, frames=frames, label=spec.class_id)


@dataclass(frozen=True)
class BenchmarkConfig:
    """The default desk-scale recognition benchmark."""

    n_train: int = 300
    n_test: int = 100
    n_classes: int = 3
    alpha_range: tuple[int, int] = (60, 140)
    joints: int = 18
    sigma: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if not 2 <= self.n_classes <= len(MOTION_KINDS):
            raise ValueError(f"n_classes must be in [2, {len(MOTION_KINDS)}], got {self.n_classes}")
        lo, hi = self.alpha_range
        if lo < 1 or hi < lo:
            raise ValueError(f"bad alpha range {self.alpha_range}")


def gen_benchmark(config: BenchmarkConfig = BenchmarkConfig()) -> tuple[list[Trajectory], list[Trajectory]]:
    """Balanced train/test trajectory sets, classes assigned round-robin."""
    rng = np.random.default_rng(config.seed)
    kinds = MOTION_KINDS[: config.n_classes]
    lo, hi = config.alpha_range

    def _make(count: int, prefix: str) -> list[Trajectory]:
        out = []
        for k in range(count):
            kind = kinds[k % len(kinds)]
            alpha = int(rng.integers(lo, hi + 1))
            seed = int(rng.integers(0, 2 ** 63))
            spec = GestureSpec(
                class_id=kind, kind=kind, alpha=alpha,
                joints=config.joints, sigma=config.sigma, seed=seed,
            )
            out.append(gen_trajectory(spec, traj_id=f"{prefix}-{kind}-{k:04d}"))
        return out

    return _make(config.n_train, "train"), _make(config.n_test, "test")


def gen_embedding_clusters(
    dim: int = 32,
    n_in: int = 500,
    n_out: int = 500,
    separation: float = 3.0,
    seed: int = 0,
    n_templates: int = 10,
) -> tuple[list[Embedding], list[Embedding]]:
    """Two Gaussian clusters plus in-class templates.

    In-class vectors center at ``+separation`` along the first axis,
    out-of-class at ``-separation``, both with unit isotropic noise. The
    templates are extra in-class draws. Candidate order is shuffled but
    deterministic for the seed.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if separation < 0:
        raise ValueError(f"separation must be >= 0, got {separation}")
    rng = np.random.default_rng(seed)
    center = np.zeros(dim)
    center[0] = separation

    templates = [
        Embedding(id=f"template-{k:02d}", vec=tuple(rng.normal(center, 1.0)), label="in")
        for k in range(n_templates)
    ]
    candidates = [
        Embedding(id=f"in-{k:04d}", vec=tuple(rng.normal(center, 1.0)), label="in")
        for k in range(n_in)
    ] + [
        Embedding(id=f"out-{k:04d}", vec=tuple(rng.normal(-center, 1.0)), label="out")
        for k in range(n_out)
    ]
    order = rng.permutation(len(candidates))
    return templates, [candidates[i] for i in order]
