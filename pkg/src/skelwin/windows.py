"""Sliding-window segmentation of a trajectory's feature sequence.

An action of ``alpha`` frames is cut into ``delta`` windows of ``beta``
frames each, advancing by ``gamma`` frames:

    delta = floor((alpha - beta) / gamma) + 1

Floor division drops any trailing partial window, keeping every window
exactly ``beta`` frames so the classifier input dimension stays fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstraintViolation, InvalidPlan, TrajectoryTooShort


@dataclass(frozen=True)
class WindowParams:
    """Window size and step, both in frames."""

    beta: int
    gamma: int

    def __post_init__(self):
        if self.beta < 1:
            raise ValueError(f"window size must be >= 1, got {self.beta}")
        if self.gamma < 1:
            raise ValueError(f"step size must be >= 1, got {self.gamma}")


@dataclass(frozen=True)
class WindowPlan:
    alpha: int
    beta: int
    gamma: int
    delta: int


@dataclass(frozen=True)
class Window:
    """A fixed-length slice of an encoded trajectory.

    ``frames`` is a ``(beta, feature_dim)`` copy, safe to keep after the
    source trajectory is gone.
    """

    start: int
    frames: np.ndarray

    def __len__(self) -> int:
        return self.frames.shape[0]


def plan_windows(alpha: int, params: WindowParams, strict: bool = False) -> WindowPlan:
    """Compute the window count for an ``alpha``-frame action.

    Relaxed mode (default) permits ``beta == alpha``, a legitimate
    single-window case for short actions. Strict mode additionally enforces
    ``beta <= alpha - gamma``, which guarantees at least two windows.
    """
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    if alpha < params.beta:
        raise TrajectoryTooShort(
            f"action has {alpha} frames but the window needs {params.beta}"
        )
    if strict and params.beta > alpha - params.gamma:
        raise ConstraintViolation(
            f"strict mode requires window size <= alpha - step "
            f"({alpha} - {params.gamma} = {alpha - params.gamma}), got {params.beta}"
        )
    delta = (alpha - params.beta) // params.gamma + 1
    return WindowPlan(alpha=alpha, beta=params.beta, gamma=params.gamma, delta=delta)


def extract_windows(traj_features: np.ndarray, plan: WindowPlan) -> list[Window]:
    """Slice the encoded trajectory into the plan's windows.

    Window ``k`` starts at frame ``k * gamma`` and copies ``beta`` consecutive
    feature vectors; frames past the last full window are dropped.
    """
    feats = np.asarray(traj_features, dtype=np.float64)
    if feats.ndim != 2:
        raise InvalidPlan(f"features must be 2-D (frames x dims), got shape {feats.shape}")
    if feats.shape[0] != plan.alpha:
        raise InvalidPlan(
            f"plan covers {plan.alpha} frames but features have {feats.shape[0]}"
        )
    windows = []
    for k in range(plan.delta):
        start = k * plan.gamma
        windows.append(Window(start=start, frames=feats[start:start + plan.beta].copy()))
    return windows
