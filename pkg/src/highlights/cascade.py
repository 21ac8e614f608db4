"""The cascaded predictor and its five baselines.

Cascade kinds evaluate a 4-class scene model on every frame and run the
highlight head only on frames gated as GamePlay; single kinds score every
frame directly. Random kinds draw scores from a counter-based generator
keyed by (seed, video_id, frame_index), so results are independent of
evaluation order and safe under concurrency.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from threading import Lock

import numpy as np

from .core import FrameImage, HighlightPrediction, ScenePrediction, SceneType
from .errors import ClassCountMismatch, MissingArtifact
from .nnet import ModelArtifact, softmax

#: index of the highlight class in binary heads (class 1 = highlight)
HIGHLIGHT_CLASS = 1
#: index of the highlight class in the 5-way multiclass head
MULTICLASS_HIGHLIGHT = 4


class ModelKind(Enum):
    SingleRandom = "single-random"
    SingleBinary = "single-binary"
    SingleMulticlass = "single-multiclass"
    CascadeRandom = "cascade-random"
    CascadeRegression = "cascade-regression"
    CascadeBinary = "cascade-binary"


CASCADE_KINDS = {ModelKind.CascadeRandom, ModelKind.CascadeRegression, ModelKind.CascadeBinary}


def keyed_uniform(seed: int, video_id: str, frame_index: int) -> float:
    """Order-independent uniform draw in [0, 1) keyed by frame identity."""
    digest = hashlib.sha256(
        f"{seed}:{video_id}:{frame_index}".encode("utf-8")
    ).digest()
    return int.from_bytes(digest[:8], "little") / 2**64


@dataclass
class Predictor:
    """Immutable after build; predict calls are concurrency-safe."""

    kind: ModelKind
    scene_model: ModelArtifact | None = None
    head_model: ModelArtifact | None = None
    threshold: float = 0.5
    rng_seed: int = 0
    input_size: int = 64
    scene_evals: int = 0
    head_evals: int = 0
    _count_lock: Lock = field(default_factory=Lock, repr=False)

    @property
    def decision_threshold(self) -> float:
        """Threshold on the exported [0,1] ranking score.

        Regression decides on the raw value > 1.0; the exported score is
        value / 3, so the equivalent ranking-scale cut is 1/3 (exclusive,
        handled by a tiny epsilon so `score >= t` matches `raw > 1.0`).
        """
        if self.kind is ModelKind.CascadeRegression:
            return 1.0 / 3.0 + 1e-12
        return self.threshold

    def reset_counts(self) -> None:
        with self._count_lock:
            self.scene_evals = 0
            self.head_evals = 0

    def evaluation_count(self) -> tuple[int, int]:
        with self._count_lock:
            return self.scene_evals, self.head_evals


def build_predictor(
    kind: ModelKind,
    scene_model: ModelArtifact | None = None,
    head_model: ModelArtifact | None = None,
    threshold: float = 0.5,
    rng_seed: int = 0,
    input_size: int = 64,
) -> Predictor:
    if kind in CASCADE_KINDS:
        if scene_model is None:
            raise MissingArtifact(f"{kind.value} requires a scene model")
        if scene_model.spec.num_classes != 4:
            raise ClassCountMismatch(
                f"scene model has {scene_model.spec.num_classes} classes, expected 4"
            )
    if kind in (ModelKind.SingleBinary, ModelKind.CascadeBinary):
        if head_model is None:
            raise MissingArtifact(f"{kind.value} requires a binary head")
        if head_model.spec.num_classes != 2:
            raise ClassCountMismatch(
                f"binary head has {head_model.spec.num_classes} classes, expected 2"
            )
    if kind is ModelKind.SingleMulticlass:
        if head_model is None:
            raise MissingArtifact("single-multiclass requires a 5-class head")
        if head_model.spec.num_classes != 5:
            raise ClassCountMismatch(
                f"multiclass head has {head_model.spec.num_classes} classes, expected 5"
            )
    if kind is ModelKind.CascadeRegression:
        if head_model is None or head_model.spec.head != "scalar-regressor":
            raise MissingArtifact("cascade-regression requires a regressor head")
    if scene_model is not None:
        input_size = scene_model.spec.input_shape[1]
    elif head_model is not None:
        input_size = head_model.spec.input_shape[1]
    return Predictor(
        kind=kind,
        scene_model=scene_model,
        head_model=head_model,
        threshold=threshold,
        rng_seed=rng_seed,
        input_size=input_size,
    )


def normalize_frame(frame: FrameImage) -> np.ndarray:
    """FrameImage -> (3, H, W) float64 in [0, 1]."""
    arr = frame.to_array().astype(np.float64) / 255.0
    return np.transpose(arr, (2, 0, 1))


_UNIFORM4 = (0.25, 0.25, 0.25, 0.25)


def predict_array(
    predictor: Predictor, x: np.ndarray, frame_index: int, video_id: str
) -> tuple[ScenePrediction, HighlightPrediction]:
    """Predict one normalized (3, H, W) frame array."""
    kind = predictor.kind
    batch = x[None]

    if kind in CASCADE_KINDS:
        probs = softmax(predictor.scene_model.network.forward(batch))[0]
        scene = SceneType(int(probs.argmax()))
        scene_pred = ScenePrediction(frame_index, scene, tuple(float(p) for p in probs))
        with predictor._count_lock:
            predictor.scene_evals += 1
        if scene is not SceneType.GamePlay:
            return scene_pred, HighlightPrediction(frame_index, 0.0, False)
        with predictor._count_lock:
            predictor.head_evals += 1
        if kind is ModelKind.CascadeRandom:
            score = keyed_uniform(predictor.rng_seed, video_id, frame_index)
            return scene_pred, HighlightPrediction(
                frame_index, score, score >= predictor.threshold
            )
        if kind is ModelKind.CascadeRegression:
            raw = float(predictor.head_model.network.forward(batch)[0, 0])
            clamped = min(max(raw, 0.0), 3.0)
            return scene_pred, HighlightPrediction(
                frame_index, clamped / 3.0, raw > 1.0
            )
        # CascadeBinary
        head_probs = softmax(predictor.head_model.network.forward(batch))[0]
        score = float(head_probs[HIGHLIGHT_CLASS])
        return scene_pred, HighlightPrediction(
            frame_index, score, score >= predictor.threshold
        )

    with predictor._count_lock:
        predictor.head_evals += 1
    if kind is ModelKind.SingleRandom:
        score = keyed_uniform(predictor.rng_seed, video_id, frame_index)
        scene_pred = ScenePrediction(frame_index, SceneType.Other, _UNIFORM4)
        return scene_pred, HighlightPrediction(
            frame_index, score, score >= predictor.threshold
        )
    if kind is ModelKind.SingleBinary:
        probs = softmax(predictor.head_model.network.forward(batch))[0]
        score = float(probs[HIGHLIGHT_CLASS])
        scene_pred = ScenePrediction(frame_index, SceneType.Other, _UNIFORM4)
        return scene_pred, HighlightPrediction(
            frame_index, score, score >= predictor.threshold
        )
    # SingleMulticlass: classes 0..3 are the scene types, class 4 is highlight
    probs = softmax(predictor.head_model.network.forward(batch))[0]
    score = float(probs[MULTICLASS_HIGHLIGHT])
    arg = int(probs.argmax())
    scene = SceneType.GamePlay if arg == MULTICLASS_HIGHLIGHT else SceneType(arg)
    scene4 = probs[:4] / max(probs[:4].sum(), 1e-300)
    scene_pred = ScenePrediction(frame_index, scene, tuple(float(p) for p in scene4))
    return scene_pred, HighlightPrediction(
        frame_index, score, score >= predictor.threshold
    )


def predict_frame(
    predictor: Predictor, frame: FrameImage, frame_index: int = 0, video_id: str = ""
) -> tuple[ScenePrediction, HighlightPrediction]:
    return predict_array(predictor, normalize_frame(frame), frame_index, video_id)
