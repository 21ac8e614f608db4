"""Dataset assembly, model training recipes, the six-model benchmark, and
the simulated machine-in-the-loop loop.

This is the glue between the corpus on disk and the nnet/cascade layers:
it turns bundle directories into training arrays, trains the artifacts
each model kind needs, and scores them with the evaluation harness.
"""

from __future__ import annotations

import os

import numpy as np

from . import annotation, corpus, evaluation, nnet
from .cascade import ModelKind, build_predictor
from .core import PipelineConfig, SceneType, scene_code

SCENE_LABELS = {0: "game-play", 1: "game-replay", 2: "character-draft", 3: "other"}
BINARY_LABELS = {0: "non-highlight", 1: "highlight"}
MULTI_LABELS = {**SCENE_LABELS, 4: "game-highlight"}


def video_dirs(root: str) -> list[str]:
    """Bundle directories under a corpus root, ordered by video_id."""
    out = []
    for name in sorted(os.listdir(root)):
        path = os.path.join(root, name)
        if os.path.isdir(path) and os.path.exists(os.path.join(path, "manifest.json")):
            out.append(path)
    return out


def load_training_frames(directory: str, frame_step: int = 3):
    """Sampled (frames, scene codes, gt levels) for one bundle.

    Frames come back normalized as (N, 3, H, W) float64 in [0, 1];
    ``frame_step`` thins the sequence to keep training desk-scale.
    """
    bundle = corpus.read_bundle(directory)
    idx = list(range(0, bundle.manifest.num_frames, frame_step))
    frames = bundle.frames[idx].astype(np.float64) / 255.0
    frames = np.transpose(frames, (0, 3, 1, 2))
    scenes = np.array([scene_code(bundle.scene_track[t]) for t in idx], dtype=np.int64)
    levels = np.array([bundle.highlight_track[t] for t in idx], dtype=np.int64)
    return frames, scenes, levels


def assemble_dataset(directories, frame_step: int = 3):
    frames, scenes, levels = [], [], []
    for d in directories:
        f, s, l = load_training_frames(d, frame_step)
        frames.append(f)
        scenes.append(s)
        levels.append(l)
    return np.concatenate(frames), np.concatenate(scenes), np.concatenate(levels)


def binary_highlight_labels(scenes: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Frame is a positive iff it is GamePlay with level >= 1."""
    gameplay = scenes == scene_code(SceneType.GamePlay)
    return (gameplay & (levels >= 1)).astype(np.int64)


def multiclass_labels(scenes: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """5-way labels: scene code 0..3, highlight gameplay frames become 4."""
    labels = scenes.copy()
    labels[binary_highlight_labels(scenes, levels) == 1] = 4
    return labels


def train_scene_model(
    frames, scenes, seed: int = 0, epochs: int = 6, input_size: int = 64
) -> nnet.ModelArtifact:
    spec = nnet.tinynet_spec(4, input_size=input_size)
    weights = nnet.inverse_frequency_weights(np.asarray(scenes, dtype=np.int64), 4)
    cfg = nnet.TrainConfig(epochs=epochs, seed=seed, class_weights=weights)
    return nnet.train(spec, frames, scenes, cfg, label_map=SCENE_LABELS)


def train_binary_head(
    frames, labels, seed: int = 0, epochs: int = 6, input_size: int = 64
) -> nnet.ModelArtifact:
    spec = nnet.tinynet_spec(2, input_size=input_size)
    weights = nnet.inverse_frequency_weights(labels, 2)
    cfg = nnet.TrainConfig(epochs=epochs, seed=seed, class_weights=weights)
    return nnet.train(spec, frames, labels, cfg, label_map=BINARY_LABELS)


def train_multiclass_head(
    frames, labels, seed: int = 0, epochs: int = 6, input_size: int = 64
) -> nnet.ModelArtifact:
    spec = nnet.tinynet_spec(5, input_size=input_size)
    weights = nnet.inverse_frequency_weights(labels, 5)
    cfg = nnet.TrainConfig(epochs=epochs, seed=seed, class_weights=weights)
    return nnet.train(spec, frames, labels, cfg, label_map=MULTI_LABELS)


def train_regressor_head(
    frames, levels, seed: int = 0, epochs: int = 6, input_size: int = 64
) -> nnet.ModelArtifact:
    spec = nnet.tinynet_spec(1, input_size=input_size, head="scalar-regressor")
    cfg = nnet.TrainConfig(epochs=epochs, seed=seed)
    return nnet.train(spec, frames, levels.astype(np.float64), cfg, label_map={0: "level"})


def dense_ground_truth(directory: str) -> np.ndarray:
    """Per-frame binary highlight ground truth for one bundle."""
    scenes, levels, _ = corpus.read_labels(directory)
    s = np.array([scene_code(x) for x in scenes], dtype=np.int64)
    return binary_highlight_labels(s, np.asarray(levels, dtype=np.int64))


def train_all_artifacts(train_dirs, seed: int = 0, epochs: int = 6, frame_step: int = 3):
    """Every artifact the six model kinds need, trained once."""
    frames, scenes, levels = assemble_dataset(train_dirs, frame_step)
    gameplay = scenes == scene_code(SceneType.GamePlay)
    binary = binary_highlight_labels(scenes, levels)
    input_size = frames.shape[2]
    return {
        "scene": train_scene_model(frames, scenes, seed, epochs, input_size),
        "cascade_binary_head": train_binary_head(
            frames[gameplay], binary[gameplay], seed, epochs, input_size
        ),
        "single_binary_head": train_binary_head(frames, binary, seed, epochs, input_size),
        "multiclass_head": train_multiclass_head(
            frames, multiclass_labels(scenes, levels), seed, epochs, input_size
        ),
        "regressor_head": train_regressor_head(
            frames[gameplay], levels[gameplay], seed, epochs, input_size
        ),
    }


def build_all_predictors(artifacts, threshold: float = 0.5, rng_seed: int = 0):
    return {
        ModelKind.SingleRandom: build_predictor(
            ModelKind.SingleRandom, threshold=threshold, rng_seed=rng_seed
        ),
        ModelKind.SingleBinary: build_predictor(
            ModelKind.SingleBinary,
            head_model=artifacts["single_binary_head"],
            threshold=threshold,
        ),
        ModelKind.SingleMulticlass: build_predictor(
            ModelKind.SingleMulticlass,
            head_model=artifacts["multiclass_head"],
            threshold=threshold,
        ),
        ModelKind.CascadeRandom: build_predictor(
            ModelKind.CascadeRandom,
            scene_model=artifacts["scene"],
            threshold=threshold,
            rng_seed=rng_seed,
        ),
        ModelKind.CascadeRegression: build_predictor(
            ModelKind.CascadeRegression,
            scene_model=artifacts["scene"],
            head_model=artifacts["regressor_head"],
            threshold=threshold,
        ),
        ModelKind.CascadeBinary: build_predictor(
            ModelKind.CascadeBinary,
            scene_model=artifacts["scene"],
            head_model=artifacts["cascade_binary_head"],
            threshold=threshold,
        ),
    }


BENCH_ORDER = (
    ModelKind.SingleRandom,
    ModelKind.SingleBinary,
    ModelKind.SingleMulticlass,
    ModelKind.CascadeRandom,
    ModelKind.CascadeRegression,
    ModelKind.CascadeBinary,
)


def run_benchmark_suite(
    corpus_root: str,
    out_dir: str,
    seed: int = 0,
    epochs: int = 6,
    frame_step: int = 3,
    stride: int = 5,
    threshold: float = 0.5,
    workers: int = 1,
):
    """Train once, evaluate all six kinds on the test split, write reports."""
    dirs = video_dirs(corpus_root)
    ids = [os.path.basename(d) for d in dirs]
    split = corpus.split_dataset(ids, seed=seed)
    by_id = dict(zip(ids, dirs))
    train_dirs = [by_id[v] for v in split.train]
    test_dirs = [by_id[v] for v in split.test]

    artifacts = train_all_artifacts(train_dirs, seed=seed, epochs=epochs, frame_step=frame_step)
    predictors = build_all_predictors(artifacts, threshold=threshold, rng_seed=seed)
    labels_by_video = {os.path.basename(d): dense_ground_truth(d) for d in test_dirs}
    input_size = artifacts["scene"].spec.input_shape[1]
    config = PipelineConfig(
        stride=stride, highlight_threshold=threshold, input_size=input_size, workers=workers
    )
    rows = []
    for kind in BENCH_ORDER:
        rows.append(
            evaluation.evaluate_model(predictors[kind], test_dirs, config, labels_by_video)
        )
    evaluation.write_report(rows, out_dir)
    return rows, artifacts, split


# --- simulated machine-in-the-loop ---

#: scene code a fresh (model-less) round pre-fills before any training
DEFAULT_PREANNOTATION = scene_code(SceneType.Other)


def simulate_mitl(
    corpus_root: str,
    model_dir: str,
    seed: int = 0,
    epochs: int = 3,
    frame_step: int = 6,
    base_batch: int = 2,
) -> list[float]:
    """Run MITL rounds with an annotator that corrects to ground truth.

    Returns the per-round correction-effort history (round 1 has no model,
    so its pre-annotations are the default scene everywhere).
    """
    os.makedirs(model_dir, exist_ok=True)
    dirs = video_dirs(corpus_root)
    ids = [os.path.basename(d) for d in dirs]
    by_id = dict(zip(ids, dirs))

    gt_tracks = {}
    for vid in ids:
        scenes, _, _ = corpus.read_labels(by_id[vid])
        gt_tracks[vid] = [scene_code(s) for s in scenes]

    def train_fn(labeled_ids):
        frames, scenes, _ = assemble_dataset([by_id[v] for v in labeled_ids], frame_step)
        artifact = train_scene_model(frames, scenes, seed=seed, epochs=epochs,
                                     input_size=frames.shape[2])
        path = os.path.join(model_dir, f"scene_round.nn")
        nnet.save_model(artifact, path)
        return path

    def predict_fn(model_path, vid):
        artifact = nnet.load_model(model_path)
        frames, _, _ = load_training_frames(by_id[vid], frame_step=1)
        codes = []
        for start in range(0, frames.shape[0], 64):
            logits = artifact.network.forward(frames[start : start + 64])
            codes.extend(int(c) for c in logits.argmax(axis=1))
        return codes

    state = annotation.RoundState(video_order=tuple(ids))
    pre = {vid: [DEFAULT_PREANNOTATION] * len(gt_tracks[vid])
           for vid in annotation.next_batch(state, base_batch)}
    efforts: list[float] = []
    while len(state.labeled) < len(ids):
        batch = annotation.next_batch(state, base_batch)
        batch_efforts = [
            annotation.correction_effort(pre[vid], gt_tracks[vid]) for vid in batch
        ]
        efforts.append(float(np.mean(batch_efforts)))
        corrections = {vid: gt_tracks[vid] for vid in batch}
        state, pre = annotation.run_mitl_round(
            state, corrections, train_fn, predict_fn, base_batch
        )
        state.effort_history = efforts
    return efforts
