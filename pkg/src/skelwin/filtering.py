"""Template-similarity filtering of candidate embeddings.

A handful of template embeddings define the acceptance region: each
candidate is scored by cosine similarity against every template, the scores
are aggregated (max or mean), and candidates at or above the threshold are
kept. Dot products and squared norms accumulate through ``math.fsum``, the
exactly-rounded sum, so any independently written scorer reproduces the
scores bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DegenerateEmbedding, NoTemplates, ShapeError, UndefinedRecall
from .trajectory import dump_jsonl, write_atomic

AGGREGATIONS = ("max", "mean")


@dataclass(frozen=True)
class Embedding:
    """A D-dimensional real vector with an id and optional ground-truth label."""

    id: str
    vec: tuple[float, ...]
    label: str | None = None

    def __post_init__(self):
        vec = tuple(float(v) for v in self.vec)
        if not vec:
            raise ShapeError(f"embedding {self.id!r} is empty")
        if not all(math.isfinite(v) for v in vec):
            raise DegenerateEmbedding(f"embedding {self.id!r} has a non-finite entry")
        if all(v == 0.0 for v in vec):
            raise DegenerateEmbedding(f"embedding {self.id!r} is the zero vector")
        object.__setattr__(self, "vec", vec)

    @property
    def dim(self) -> int:
        return len(self.vec)

    def norm(self) -> float:
        return math.sqrt(math.fsum(v * v for v in self.vec))


@dataclass(frozen=True)
class FilterPolicy:
    """Similarity metric, acceptance threshold, and template aggregation."""

    metric: str = "cosine"
    threshold: float = 0.85
    aggregation: str = "max"

    def __post_init__(self):
        if self.metric != "cosine":
            raise ValueError(f"unsupported metric {self.metric!r}")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}, got {self.aggregation!r}")
        if not -1.0 <= self.threshold <= 1.0:
            raise ValueError(f"cosine threshold must lie in [-1, 1], got {self.threshold}")


@dataclass
class FilterReport:
    """Accept/reject partition of the candidates with their scores."""

    accepted: list[str]
    rejected: list[str]
    scores: dict[str, float]
    acceptance_rate: float


def cosine_similarity(a: Embedding, b: Embedding) -> float:
    """dot(a, b) / (|a| |b|), in [-1, 1] up to 1e-12 rounding.

    Identical vectors short-circuit to exactly 1.0, so self-matches stay
    stable at a threshold of 1.0 instead of landing one rounding step below.
    """
    if a.dim != b.dim:
        raise ShapeError(f"dimension mismatch: {a.id!r} has {a.dim}, {b.id!r} has {b.dim}")
    if a.vec == b.vec:
        return 1.0
    dot = math.fsum(x * y for x, y in zip(a.vec, b.vec))
    denom = a.norm() * b.norm()
    if denom == 0.0:
        raise DegenerateEmbedding(f"zero-norm embedding among {a.id!r}, {b.id!r}")
    return dot / denom


def _check_uniform_dim(templates: Sequence[Embedding], candidates: Sequence[Embedding]) -> None:
    if not templates:
        raise NoTemplates("need at least one template embedding")
    dim = templates[0].dim
    for e in list(templates) + list(candidates):
        if e.dim != dim:
            raise ShapeError(
                f"embedding {e.id!r} has dimension {e.dim}, collection uses {dim}"
            )


def score_candidates(
    templates: Sequence[Embedding],
    candidates: Sequence[Embedding],
    aggregation: str = "max",
) -> dict[str, float]:
    """Aggregated per-candidate similarity against the template set."""
    _check_uniform_dim(templates, candidates)
    if aggregation not in AGGREGATIONS:
        raise ValueError(f"aggregation must be one of {AGGREGATIONS}, got {aggregation!r}")
    scores: dict[str, float] = {}
    for cand in candidates:
        sims = [cosine_similarity(cand, t) for t in templates]
        if aggregation == "max":
            scores[cand.id] = max(sims)
        else:
            scores[cand.id] = math.fsum(sims) / len(sims)
    return scores


def filter_candidates(
    templates: Sequence[Embedding],
    candidates: Sequence[Embedding],
    policy: FilterPolicy = FilterPolicy(),
) -> FilterReport:
    """Partition candidates into accepted (score >= threshold) and rejected."""
    scores = score_candidates(templates, candidates, policy.aggregation)
    accepted = [c.id for c in candidates if scores[c.id] >= policy.threshold]
    rejected = [c.id for c in candidates if scores[c.id] < policy.threshold]
    rate = len(accepted) / len(candidates) if candidates else 0.0
    return FilterReport(accepted=accepted, rejected=rejected, scores=scores, acceptance_rate=rate)


def sweep_threshold(
    templates: Sequence[Embedding],
    labeled_candidates: Sequence[Embedding],
    taus: Sequence[float],
    aggregation: str = "max",
    positive_label: str = "in",
) -> list[tuple[float, float | None, float]]:
    """Precision and recall at each threshold, from one scoring pass.

    Precision is ``None`` when a threshold accepts nothing. Requires at least
    one ground-truth positive, otherwise recall is undefined.
    """
    positives = {c.id for c in labeled_candidates if c.label == positive_label}
    if not positives:
        raise UndefinedRecall(
            f"no candidate carries the positive label {positive_label!r}"
        )
    scores = score_candidates(templates, labeled_candidates, aggregation)
    curve: list[tuple[float, float | None, float]] = []
    for tau in taus:
        accepted = [cid for cid, s in scores.items() if s >= tau]
        tp = sum(1 for cid in accepted if cid in positives)
        precision = tp / len(accepted) if accepted else None
        recall = tp / len(positives)
        curve.append((float(tau), precision, recall))
    return curve


# ---------------------------------------------------------------------------
# JSONL codec: {"id": str, "label": str|null, "vec": [...]}
# ---------------------------------------------------------------------------


def embedding_to_record(emb: Embedding) -> dict:
    return {"id": emb.id, "label": emb.label, "vec": list(emb.vec)}


def embedding_from_record(record: dict, where: str = "") -> Embedding:
    ctx = f" ({where})" if where else ""
    if not isinstance(record, dict):
        raise ShapeError(f"expected a JSON object{ctx}")
    try:
        emb_id = record["id"]
        vec = record["vec"]
    except KeyError as exc:
        raise ShapeError(f"missing field {exc}{ctx}") from None
    label = record.get("label")
    if not isinstance(emb_id, str):
        raise ShapeError(f"id must be a string{ctx}")
    if label is not None and not isinstance(label, str):
        raise ShapeError(f"label must be a string or null{ctx}")
    if not isinstance(vec, list):
        raise ShapeError(f"embedding {emb_id!r}: vec must be a list{ctx}")
    return Embedding(id=emb_id, vec=tuple(float(v) for v in vec), label=label)


def write_embeddings(path: str | Path, embeddings: Iterable[Embedding]) -> int:
    records = [embedding_to_record(e) for e in embeddings]
    write_atomic(path, dump_jsonl(records))
    return len(records)


def read_embeddings(path: str | Path) -> list[Embedding]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ShapeError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            out.append(embedding_from_record(record, where=f"{path}:{lineno}"))
    if out:
        dim = out[0].dim
        for e in out:
            if e.dim != dim:
                raise ShapeError(
                    f"{path}: embedding {e.id!r} has dimension {e.dim}, file uses {dim}"
                )
    return out
