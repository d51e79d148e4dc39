"""Sliding-window action recognition over 2D skeleton trajectories."""

from .errors import (
    ConstraintViolation,
    DegenerateEmbedding,
    DivergenceError,
    EngineError,
    InvalidJointSet,
    InvalidPlan,
    InvalidTrajectory,
    LabelError,
    MissingLabel,
    NoTemplates,
    ShapeError,
    TrajectoryTooShort,
    UndefinedRecall,
)
from .filtering import (
    Embedding,
    FilterPolicy,
    FilterReport,
    cosine_similarity,
    filter_candidates,
    read_embeddings,
    score_candidates,
    sweep_threshold,
    write_embeddings,
)
from .model import (
    ClassDistribution,
    ModelConfig,
    TemporalModel,
    TrainOptions,
    forward,
    forward_batch,
    init_model,
    load_model,
    loss_and_gradients,
    save_model,
    train,
)
from .synth import BenchmarkConfig, GestureSpec, gen_benchmark, gen_embedding_clusters, gen_trajectory
from .trajectory import (
    JOINT_PRESETS,
    JointSet,
    Trajectory,
    encode_frames,
    normalize,
    read_trajectories,
    select_joints,
    write_trajectories,
)
from .voting import VoteResult, WindowVote, aggregate_votes, classify_action, evaluate
from .windows import Window, WindowParams, WindowPlan, extract_windows, plan_windows

__version__ = "0.1.0"
