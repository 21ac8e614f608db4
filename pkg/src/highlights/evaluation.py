"""Frame-level average precision and recall, plus the six-model benchmark.

AP is non-interpolated: frames are ranked by descending score with ties
broken by ascending frame index, and AP is the mean of precision@rank
over the positive-labeled ranks.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass

import numpy as np

from .core import format_score
from .errors import NoPositives


def _ranking(scores: np.ndarray) -> np.ndarray:
    """Indices sorted by descending score, ascending index on ties."""
    # stable sort on -score preserves ascending index order within ties
    return np.argsort(-scores, kind="stable")


def average_precision(scores, labels) -> float:
    """Non-interpolated frame-level AP in [0, 1]."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have equal length")
    positives = int(labels.sum())
    if positives == 0:
        raise NoPositives("AP undefined without positive labels")
    order = _ranking(scores)
    ranked = labels[order]
    cum_tp = np.cumsum(ranked)
    ranks = np.arange(1, len(ranked) + 1)
    precision_at = cum_tp / ranks
    return float(precision_at[ranked == 1].sum() / positives)


def recall_at_threshold(scores, labels, threshold: float = 0.5) -> float:
    """Recall of the thresholded predictions: TP / (TP + FN)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    positives = int(labels.sum())
    if positives == 0:
        raise NoPositives("recall undefined without positive labels")
    predicted = scores >= threshold
    tp = int(np.sum(predicted & (labels == 1)))
    return tp / positives


def per_class_metrics(probabilities: np.ndarray, labels: np.ndarray) -> list[dict]:
    """One-vs-rest AP and argmax recall for each class of a classifier."""
    num_classes = probabilities.shape[1]
    argmax = probabilities.argmax(axis=1)
    rows = []
    for c in range(num_classes):
        binary = (labels == c).astype(np.int64)
        if binary.sum() == 0:
            continue  # class absent from this split
        ap = average_precision(probabilities[:, c], binary)
        tp = int(np.sum((argmax == c) & (labels == c)))
        rows.append({"class": c, "ap": ap, "recall": tp / int(binary.sum())})
    return rows


@dataclass(frozen=True)
class EvalRow:
    model: str
    ap_percent: float
    recall_percent: float
    fps: float
    head_eval_fraction: float


def evaluate_model(predictor, test_dirs, config, labels_by_video) -> EvalRow:
    """Run the pipeline over every test video and score the dense output.

    ``labels_by_video`` maps video_id -> per-frame binary ground truth.
    Dense scores and labels are concatenated across videos before AP and
    recall are computed; throughput is aggregated over classified frames.
    """
    from . import pipeline as pl

    all_scores: list[np.ndarray] = []
    all_labels: list[np.ndarray] = []
    frames_classified = 0
    wall = 0.0
    scene_evals = 0
    head_evals = 0
    for directory in test_dirs:
        source = pl.open_source(directory, mode="image-sequence")
        timeline, report = pl.run_pipeline(source, predictor, config)
        all_scores.append(np.asarray(timeline.score, dtype=np.float64))
        all_labels.append(np.asarray(labels_by_video[timeline.video_id], dtype=np.int64))
        frames_classified += report.frames_classified
        wall += report.wall_time_s
        scene_evals += report.scene_evals
        head_evals += report.head_evals
    scores = np.concatenate(all_scores)
    labels = np.concatenate(all_labels)
    ap = average_precision(scores, labels)
    recall = recall_at_threshold(scores, labels, predictor.decision_threshold)
    return EvalRow(
        model=predictor.kind.value,
        ap_percent=100.0 * ap,
        recall_percent=100.0 * recall,
        fps=frames_classified / wall if wall > 0 else float("inf"),
        head_eval_fraction=head_evals / max(1, scene_evals if scene_evals else head_evals),
    )


def write_report(rows: list[EvalRow], directory: str) -> str:
    """Write report.csv plus an aligned plain-text table; returns csv path."""
    os.makedirs(directory, exist_ok=True)
    csv_path = os.path.join(directory, "report.csv")
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["model", "ap_percent", "recall_percent", "fps", "head_eval_fraction"])
        for row in rows:
            writer.writerow(
                [
                    row.model,
                    f"{row.ap_percent:.4f}",
                    f"{row.recall_percent:.4f}",
                    f"{row.fps:.2f}",
                    format_score(row.head_eval_fraction),
                ]
            )
    txt_path = os.path.join(directory, "report.txt")
    with open(txt_path, "w") as f:
        f.write(f"{'model':<22}{'AP%':>10}{'Recall%':>10}{'FPS':>10}{'head frac':>12}\n")
        for row in rows:
            f.write(
                f"{row.model:<22}{row.ap_percent:>10.2f}{row.recall_percent:>10.2f}"
                f"{row.fps:>10.1f}{row.head_eval_fraction:>12.3f}\n"
            )
    return csv_path
