"""Window-level classification and majority-vote aggregation.

Every window of an action gets a predicted class; the action's final label
is the class that won the most windows. Ties break toward the class with the
largest summed softmax confidence across its winning windows, then toward
the smallest class index, so aggregation stays deterministic.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import LabelError, MissingLabel
from .model import TemporalModel, forward_batch
from .trajectory import JointSet, Trajectory, encode_frames, normalize, select_joints
from .windows import WindowParams, extract_windows, plan_windows


class WindowVote(NamedTuple):
    start: int
    label: int
    prob: float


@dataclass
class VoteResult:
    """Histogram of per-window predictions plus the aggregated label.

    ``histogram`` maps class index to window count over the classes that won
    at least one window; counts sum to the window count delta.
    """

    histogram: dict[int, int]
    per_window: list[WindowVote]
    final_label: int
    tie_broken: bool


def aggregate_votes(per_window: Sequence[WindowVote]) -> VoteResult:
    """Reduce per-window predictions to one action label by majority vote."""
    if not per_window:
        raise ValueError("cannot aggregate zero windows")
    votes = [WindowVote(int(s), int(l), float(p)) for s, l, p in per_window]
    counts = Counter(v.label for v in votes)
    top = max(counts.values())
    tied = sorted(c for c, n in counts.items() if n == top)
    if len(tied) == 1:
        final, tie_broken = tied[0], False
    else:
        confidence = {c: sum(v.prob for v in votes if v.label == c) for c in tied}
        final = min(tied, key=lambda c: (-confidence[c], c))
        tie_broken = True
    return VoteResult(
        histogram=dict(sorted(counts.items())),
        per_window=votes,
        final_label=final,
        tie_broken=tie_broken,
    )


def classify_action(
    model: TemporalModel,
    traj: Trajectory,
    joints: JointSet | None = None,
    params: WindowParams | None = None,
    normalize_mode: str = "none",
) -> VoteResult:
    """Run the full recognition path on one trajectory.

    Joint selection, normalization, and frame encoding feed the window plan;
    each window is classified and the votes aggregated. ``joints=None`` keeps
    every joint; ``params=None`` disables windowing and classifies the whole
    action as a single sequence.
    """
    t = select_joints(traj, joints) if joints is not None else traj
    t = normalize(t, normalize_mode)
    feats = encode_frames(t)
    effective = params if params is not None else WindowParams(beta=t.alpha, gamma=1)
    plan = plan_windows(t.alpha, effective, strict=False)
    windows = extract_windows(feats, plan)
    probs = forward_batch(model, np.stack([w.frames for w in windows]))
    labels = probs.argmax(axis=1)
    per_window = [
        WindowVote(w.start, int(labels[k]), float(probs[k, labels[k]]))
        for k, w in enumerate(windows)
    ]
    return aggregate_votes(per_window)


def evaluate(
    model: TemporalModel,
    labeled_trajs: Sequence[Trajectory],
    joints: JointSet | None = None,
    params: WindowParams | None = None,
    normalize_mode: str = "none",
    class_names: Sequence[str] | None = None,
) -> dict:
    """Score a labeled set: action accuracy, window accuracy, confusion.

    ``class_names`` defaults to the model's stored vocabulary. The confusion
    matrix is over final labels, rows true and columns predicted. The
    returned dict is JSON-ready.
    """
    if class_names is None:
        class_names = model.config.classes
    if class_names is None:
        raise LabelError("no class vocabulary: pass class_names or use a model that stores one")
    if len(class_names) != model.config.num_classes:
        raise LabelError(
            f"{len(class_names)} class names for a {model.config.num_classes}-class model"
        )
    index = {name: k for k, name in enumerate(class_names)}

    n_classes = len(class_names)
    confusion = [[0] * n_classes for _ in range(n_classes)]
    per_trajectory = []
    correct_actions = 0
    correct_windows = 0
    total_windows = 0
    for traj in labeled_trajs:
        if traj.label is None:
            raise MissingLabel(f"trajectory {traj.id!r} has no label")
        if traj.label not in index:
            raise LabelError(f"trajectory {traj.id!r} label {traj.label!r} not in vocabulary")
        truth = index[traj.label]
        vote = classify_action(model, traj, joints, params, normalize_mode)
        confusion[truth][vote.final_label] += 1
        correct_actions += int(vote.final_label == truth)
        correct_windows += sum(1 for v in vote.per_window if v.label == truth)
        total_windows += len(vote.per_window)
        per_trajectory.append(
            {
                "id": traj.id,
                "label": traj.label,
                "predicted": class_names[vote.final_label],
                "correct": vote.final_label == truth,
                "windows": len(vote.per_window),
                "tie_broken": vote.tie_broken,
                "histogram": {class_names[c]: n for c, n in vote.histogram.items()},
            }
        )
    n = len(per_trajectory)
    return {
        "classes": list(class_names),
        "action_accuracy": correct_actions / n if n else 0.0,
        "window_accuracy": correct_windows / total_windows if total_windows else 0.0,
        "confusion": confusion,
        "per_trajectory": per_trajectory,
    }
