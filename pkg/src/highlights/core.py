"""Shared domain vocabulary: frames, scene types, manifests, timelines.

All types here are immutable value data and safe to share between
concurrent workers. Scores are held as 64-bit floats internally and
serialized as decimal text with 6 fractional digits (see
``format_score``) so that file outputs are byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import BadPattern, MissingField, NonPositiveDimension, UnknownCode


class SceneType(Enum):
    """The four-way scene gate: game play vs. everything that is not."""

    GamePlay = 0
    GameReplay = 1
    CharacterDraft = 2
    Other = 3


def scene_code(scene: SceneType) -> int:
    """Stable integer code for serialization (GamePlay=0 .. Other=3)."""
    return scene.value


def scene_from_code(code: int) -> SceneType:
    """Inverse of :func:`scene_code`; rejects codes outside 0..3."""
    try:
        return SceneType(int(code))
    except (ValueError, TypeError):
        raise UnknownCode(code) from None


#: Valid highlight levels: 0 (non-highlight), 1, 2, 3 in rising intensity.
HIGHLIGHT_LEVELS = (0, 1, 2, 3)


def validate_level(level: int) -> int:
    if level not in HIGHLIGHT_LEVELS:
        raise UnknownCode(level)
    return int(level)


@dataclass(frozen=True)
class FrameRef:
    """Identity of a single frame within a video."""

    video_id: str
    frame_index: int
    timestamp_s: float

    @staticmethod
    def at(video_id: str, frame_index: int, fps: float) -> "FrameRef":
        return FrameRef(video_id, frame_index, frame_index / fps)


@dataclass(frozen=True)
class FrameImage:
    """Raw RGB pixels, row-major, 8 bits per channel."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise NonPositiveDimension("width" if self.width <= 0 else "height")
        if len(self.pixels) != self.width * self.height * 3:
            raise ValueError(
                f"pixel buffer length {len(self.pixels)} != "
                f"{self.width}x{self.height}x3"
            )

    def to_array(self) -> np.ndarray:
        """View as (height, width, 3) uint8 array."""
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(
            self.height, self.width, 3
        )

    @staticmethod
    def from_array(arr: np.ndarray) -> "FrameImage":
        h, w, c = arr.shape
        assert c == 3
        return FrameImage(width=w, height=h, pixels=arr.astype(np.uint8).tobytes())


@dataclass(frozen=True)
class VideoManifest:
    video_id: str
    fps: float
    width: int
    height: int
    num_frames: int
    frame_pattern: str
    ground_truth_paths: tuple[str, ...] = ()
    format_version: int = 1


MANIFEST_FORMAT_VERSION = 1

_MANIFEST_REQUIRED = ("video_id", "fps", "width", "height", "num_frames", "frame_pattern")


def validate_manifest(raw: dict) -> VideoManifest:
    """Validate a parsed manifest record and build a :class:`VideoManifest`.

    Raises MissingField / NonPositiveDimension / BadPattern, each naming
    the offending field.
    """
    for key in _MANIFEST_REQUIRED:
        if key not in raw:
            raise MissingField(key)
    for key in ("fps", "width", "height", "num_frames"):
        if not raw[key] or raw[key] <= 0:
            raise NonPositiveDimension(key)
    pattern = str(raw["frame_pattern"])
    # The pattern must expand to a distinct URI per index.
    try:
        if (pattern % 0) == (pattern % 1):
            raise BadPattern(pattern)
    except (TypeError, ValueError):
        raise BadPattern(pattern) from None
    return VideoManifest(
        video_id=str(raw["video_id"]),
        fps=float(raw["fps"]),
        width=int(raw["width"]),
        height=int(raw["height"]),
        num_frames=int(raw["num_frames"]),
        frame_pattern=pattern,
        ground_truth_paths=tuple(raw.get("ground_truth_paths", ())),
        format_version=int(raw.get("format_version", MANIFEST_FORMAT_VERSION)),
    )


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs of the streaming predictor."""

    stride: int = 5
    highlight_threshold: float = 0.5
    input_size: int = 64
    realtime_pacing: bool = False
    queue_capacity: int = 16
    workers: int = 1

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if not (0.0 <= self.highlight_threshold <= 1.0):
            raise ValueError("highlight_threshold must be in [0, 1]")


@dataclass(frozen=True)
class HighlightPrediction:
    frame_index: int
    score: float
    is_highlight: bool


@dataclass(frozen=True)
class ScenePrediction:
    frame_index: int
    scene: SceneType
    probabilities: tuple[float, float, float, float]


@dataclass(frozen=True)
class Timeline:
    """Dense per-frame predictions for one video."""

    video_id: str
    fps: float
    scene: tuple[SceneType, ...]
    score: tuple[float, ...]
    sampled_indices: tuple[int, ...]

    def __post_init__(self):
        if len(self.scene) != len(self.score):
            raise ValueError("scene and score arrays must have equal length")
        for s in self.score:
            if not (0.0 <= s <= 1.0):
                raise ValueError(f"score {s} outside [0, 1]")

    @property
    def num_frames(self) -> int:
        return len(self.score)


def format_score(x: float) -> str:
    """Canonical 6-fractional-digit decimal rendering of a score."""
    return f"{x:.6f}"


def format_scores(xs: Sequence[float]) -> list[str]:
    return [format_score(x) for x in xs]
