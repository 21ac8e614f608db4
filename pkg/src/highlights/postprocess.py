"""Score interpolation, thresholding and highlight segment extraction.

Scores are linearly interpolated from the sampled frames back to the
original frame rate; scene labels are categorical and instead take the
label of the nearest sampled frame (ties toward the earlier sample).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import SceneType
from .errors import CoverageGap, UnsortedSamples


@dataclass(frozen=True)
class Segment:
    start_frame: int
    end_frame: int  # inclusive
    peak_score: float
    mean_score: float


def interpolate(sampled: Sequence[tuple[int, float]], num_frames: int) -> np.ndarray:
    """Linearly interpolate sampled (index, score) pairs to a dense array.

    Requires strictly increasing indices covering [0, num_frames - 1];
    exact at every sample point.
    """
    if not sampled:
        raise CoverageGap("no samples")
    indices = [i for i, _ in sampled]
    for a, b in zip(indices, indices[1:]):
        if b <= a:
            raise UnsortedSamples(f"indices not strictly increasing at {a} -> {b}")
    if indices[0] != 0:
        raise CoverageGap(f"first sample at {indices[0]}, expected 0")
    if indices[-1] != num_frames - 1:
        raise CoverageGap(f"last sample at {indices[-1]}, expected {num_frames - 1}")
    idx = np.asarray(indices, dtype=np.float64)
    val = np.asarray([s for _, s in sampled], dtype=np.float64)
    dense = np.interp(np.arange(num_frames, dtype=np.float64), idx, val)
    # exactness at sample points regardless of fp rounding
    dense[np.asarray(indices, dtype=np.intp)] = val
    return dense


def nearest_scene(
    sampled: Sequence[tuple[int, SceneType]], num_frames: int
) -> list[SceneType]:
    """Assign each frame the scene of its nearest sampled frame.

    Ties go to the earlier sample.
    """
    if not sampled:
        raise CoverageGap("no samples")
    indices = [i for i, _ in sampled]
    scenes = [s for _, s in sampled]
    out: list[SceneType] = []
    k = 0
    for t in range(num_frames):
        while k + 1 < len(indices) and (
            abs(indices[k + 1] - t) < abs(indices[k] - t)
        ):
            k += 1
        out.append(scenes[k])
    return out


def extract_segments(
    scores: Sequence[float],
    threshold: float = 0.5,
    min_len_frames: int = 15,
    merge_gap_frames: int = 10,
) -> list[Segment]:
    """Maximal above-threshold runs, gap-merged then length-filtered.

    Runs separated by a sub-threshold gap of at most ``merge_gap_frames``
    are merged; merged runs shorter than ``min_len_frames`` are dropped.
    """
    dense = np.asarray(scores, dtype=np.float64)
    above = dense >= threshold
    runs: list[list[int]] = []  # [start, end] inclusive
    start = None
    for t, flag in enumerate(above):
        if flag and start is None:
            start = t
        elif not flag and start is not None:
            runs.append([start, t - 1])
            start = None
    if start is not None:
        runs.append([start, len(dense) - 1])

    merged: list[list[int]] = []
    for run in runs:
        if merged and run[0] - merged[-1][1] - 1 <= merge_gap_frames:
            merged[-1][1] = run[1]
        else:
            merged.append(run)

    segments = []
    for s, e in merged:
        if e - s + 1 < min_len_frames:
            continue
        chunk = dense[s : e + 1]
        segments.append(
            Segment(
                start_frame=s,
                end_frame=e,
                peak_score=float(chunk.max()),
                mean_score=float(chunk.mean()),
            )
        )
    return segments
