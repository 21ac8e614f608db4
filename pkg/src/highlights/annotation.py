"""Annotator agreement math and the machine-in-the-loop round manager.

Cronbach's alpha uses population (divide-by-n) variances throughout:

    alpha = k/(k-1) * (1 - sum_i var(level_i) / var(frame sums))

Highlight labels live only on game-play frames; callers are expected to
restrict matrices to those frames before computing agreement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .core import SceneType
from .errors import (
    AllSubsetsDegenerate,
    EmptySubset,
    IncompleteCorrections,
    LengthMismatch,
    TooFewAnnotators,
    ZeroTotalVariance,
)


@dataclass(frozen=True)
class AnnotationMatrix:
    """Dense annotators x frames grid of highlight levels 0-3."""

    annotator_ids: tuple[str, ...]
    frame_indices: tuple[int, ...]
    levels: np.ndarray  # (k, n) int

    def __post_init__(self):
        k, n = self.levels.shape
        if k != len(self.annotator_ids) or n != len(self.frame_indices):
            raise LengthMismatch("levels grid does not match ids/indices")
        if k < 2 or n < 2:
            raise TooFewAnnotators(f"need k >= 2 and n >= 2, got k={k}, n={n}")

    def rows_for(self, subset: Sequence[str]) -> np.ndarray:
        index = {a: i for i, a in enumerate(self.annotator_ids)}
        return self.levels[[index[a] for a in subset], :]


def cronbach_alpha(levels: np.ndarray) -> float:
    """Cronbach's alpha of a (k, n) level grid, population variances."""
    levels = np.asarray(levels, dtype=np.float64)
    k, n = levels.shape
    item_vars = levels.var(axis=1)  # per-annotator variance across frames
    total_var = levels.sum(axis=0).var()  # variance of per-frame sums
    if total_var == 0.0:
        raise ZeroTotalVariance("per-frame sum variance is zero; alpha undefined")
    return (k / (k - 1)) * (1.0 - item_vars.sum() / total_var)


def matrix_alpha(matrix: AnnotationMatrix) -> float:
    return cronbach_alpha(matrix.levels)


def select_best_k(matrix: AnnotationMatrix, k_sel: int = 3) -> tuple[str, ...]:
    """Exhaustively pick the annotator subset with maximal alpha.

    Subsets with undefined alpha rank below all defined ones; ties break
    toward the lexicographically smallest sorted id tuple.
    """
    ids = matrix.annotator_ids
    if len(ids) < k_sel:
        raise TooFewAnnotators(f"need {k_sel} annotators, have {len(ids)}")
    best: tuple[str, ...] | None = None
    best_alpha = -np.inf
    for subset in combinations(sorted(ids), k_sel):
        try:
            alpha = cronbach_alpha(matrix.rows_for(subset))
        except ZeroTotalVariance:
            continue
        if alpha > best_alpha:
            best, best_alpha = subset, alpha
    if best is None:
        raise AllSubsetsDegenerate("every subset has zero total variance")
    return best


@dataclass(frozen=True)
class AggregatedTrack:
    """Per-frame mean level of the contributing annotator subset."""

    frame_indices: tuple[int, ...]
    scores: np.ndarray  # (n,) float in [0, 3]
    contributors: tuple[str, ...]


def aggregate_scores(matrix: AnnotationMatrix, subset: Sequence[str]) -> AggregatedTrack:
    if not subset:
        raise EmptySubset("contributor subset is empty")
    rows = matrix.rows_for(subset)
    return AggregatedTrack(
        frame_indices=matrix.frame_indices,
        scores=rows.mean(axis=0),
        contributors=tuple(subset),
    )


def binarize_labels(scores: Sequence[float], tau: float = 1.0) -> np.ndarray:
    """Binary highlight labels: 1 iff the aggregated score >= tau."""
    return (np.asarray(scores, dtype=np.float64) >= tau).astype(np.int64)


def correction_effort(pre: Sequence[int], corrected: Sequence[int]) -> float:
    """Hamming fraction of frames a human had to change."""
    a = np.asarray(pre)
    b = np.asarray(corrected)
    if a.shape != b.shape:
        raise LengthMismatch(f"track lengths differ: {a.shape} vs {b.shape}")
    return float(np.mean(a != b))


# --- machine-in-the-loop rounds ---


def batch_schedule(num_videos: int, base: int = 2) -> list[int]:
    """Round sizes growing 1:2:3, remainder in the final round."""
    sizes = []
    used = 0
    mult = 1
    while used < num_videos:
        size = min(base * mult, num_videos - used)
        if mult >= 3:
            size = num_videos - used
        sizes.append(size)
        used += size
        mult += 1
    return sizes


@dataclass
class RoundState:
    """State threaded through consecutive machine-in-the-loop rounds."""

    round_number: int = 0
    video_order: tuple[str, ...] = ()
    labeled: list[str] = field(default_factory=list)
    pending: list[str] = field(default_factory=list)
    effort_history: list[float] = field(default_factory=list)
    model_path: str | None = None

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "round_number": self.round_number,
            "video_order": list(self.video_order),
            "labeled": list(self.labeled),
            "pending": list(self.pending),
            "effort_history": self.effort_history,
            "model_path": self.model_path,
        }

    @staticmethod
    def from_dict(raw: dict) -> "RoundState":
        return RoundState(
            round_number=raw["round_number"],
            video_order=tuple(raw["video_order"]),
            labeled=list(raw["labeled"]),
            pending=list(raw["pending"]),
            effort_history=list(raw["effort_history"]),
            model_path=raw.get("model_path"),
        )


def next_batch(state: RoundState, base: int = 2) -> list[str]:
    """Videos to annotate in the upcoming round, per the growth schedule."""
    sizes = batch_schedule(len(state.video_order), base)
    done = len(state.labeled)
    if done >= len(state.video_order):
        return []
    # locate the schedule position of the next round
    acc = 0
    for size in sizes:
        if acc >= done:
            return list(state.video_order[acc : acc + size])
        acc += size
    return list(state.video_order[done:])


def merge_corrections(
    state: RoundState, corrections: dict[str, list[int]], batch: Sequence[str]
) -> None:
    """Validate that corrections cover the batch and mark videos labeled."""
    for video_id in batch:
        if video_id not in corrections:
            raise IncompleteCorrections(video_id)
    state.labeled.extend(batch)


def scene_votes_to_track(codes: Sequence[int]) -> list[SceneType]:
    return [SceneType(int(c)) for c in codes]


def run_mitl_round(
    state: RoundState,
    corrections: dict[str, list[int]],
    train_fn,
    predict_fn,
    base: int = 2,
) -> tuple[RoundState, dict[str, list[int]]]:
    """Advance one machine-in-the-loop round.

    ``corrections`` maps video_id -> corrected per-frame scene codes for
    the previous batch (must cover it fully). The model is retrained on
    every labeled video, then pre-annotates the next batch.

    ``train_fn(video_ids) -> model_path`` and
    ``predict_fn(model_path, video_id) -> per-frame scene codes`` are
    injected so this module stays free of training machinery.

    Returns the new state plus pre-annotations for the next batch.
    """
    batch = next_batch(state, base)
    merge_corrections(state, corrections, batch)
    state.round_number += 1
    state.model_path = train_fn(list(state.labeled))
    upcoming = next_batch(state, base)
    state.pending = list(upcoming)
    pre = {vid: predict_fn(state.model_path, vid) for vid in upcoming}
    return state, pre
