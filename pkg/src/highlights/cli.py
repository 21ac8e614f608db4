"""Command-line entry point.

Exit codes: 0 ok, 1 usage error, 2 runtime error. File outputs land
under ``--out`` with fixed names (timeline.json, segments.csv,
report.csv, throughput.json); stdout carries a human summary only.
"""

from __future__ import annotations

import csv
import json
import os
import sys

import click
import numpy as np

from . import annotation, corpus, evaluation, nnet, postprocess, service, workflow
from .cascade import ModelKind, build_predictor
from .core import PipelineConfig, format_score, scene_code
from .errors import HighlightsError

KIND_BY_NAME = {k.value: k for k in ModelKind}


def _runtime_error(e: Exception):
    click.echo(f"error: {e}", err=True)
    sys.exit(2)


def _default_workers() -> int:
    return min(8, os.cpu_count() or 1)


class _Group(click.Group):
    # usage problems exit 1, runtime problems exit 2 (click defaults both to 2)
    def main(self, *args, **kwargs):
        try:
            return super().main(*args, standalone_mode=False, **kwargs)
        except click.UsageError as e:
            e.show()
            sys.exit(1)
        except click.ClickException as e:
            e.show()
            sys.exit(e.exit_code)
        except click.exceptions.Abort:
            sys.exit(1)


@click.group(cls=_Group)
def main():
    """Cascaded esports highlight detection toolkit."""


@main.command()
@click.option("--out", required=True, type=click.Path(), help="Corpus output directory.")
@click.option("--videos", default=10, show_default=True, help="Number of videos to synthesize.")
@click.option("--seed", default=0, show_default=True, help="Generator seed.")
@click.option("--style", default="hots", show_default=True,
              type=click.Choice(["hots", "lol", "dota2"]), help="Palette/imbalance style.")
@click.option("--frames", default=1800, show_default=True, help="Frames per video.")
@click.option("--fps", default=30.0, show_default=True, help="Frames per second.")
@click.option("--size", default=64, show_default=True, help="Frame edge length in pixels.")
@click.option("--noise", default=6.0, show_default=True, help="Additive pixel noise sigma.")
def synth(out, videos, seed, style, frames, fps, size, noise):
    """Generate a synthetic corpus of esports-like videos."""
    try:
        for i in range(videos):
            spec = corpus.default_spec(
                i, seed, num_frames=frames, fps=fps, width=size, height=size,
                noise_level=noise, style=style,
            )
            rendered, scenes, levels = corpus.generate_video(spec)
            video_id = f"video_{i:04d}"
            manifest = corpus.validate_manifest({
                "video_id": video_id, "fps": fps, "width": size, "height": size,
                "num_frames": frames, "frame_pattern": corpus.FRAME_PATTERN,
            })
            bundle = corpus.Bundle(manifest, rendered, scenes, levels)
            corpus.write_bundle(bundle, os.path.join(out, video_id))
        click.echo(f"wrote {videos} videos to {out}")
    except HighlightsError as e:
        _runtime_error(e)


@main.command()
@click.option("--corpus-dir", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(), help="Model output directory.")
@click.option("--target", default="scene", show_default=True,
              type=click.Choice(["scene", "cascade-binary-head", "single-binary-head",
                                 "multiclass-head", "regressor-head", "all"]))
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=6, show_default=True)
@click.option("--frame-step", default=3, show_default=True,
              help="Train on every Nth frame of each video.")
def train(corpus_dir, out, target, seed, epochs, frame_step):
    """Train model artifacts on the train split of a corpus."""
    try:
        dirs = workflow.video_dirs(corpus_dir)
        ids = [os.path.basename(d) for d in dirs]
        split = corpus.split_dataset(ids, seed=seed)
        by_id = dict(zip(ids, dirs))
        train_dirs = [by_id[v] for v in split.train]
        artifacts = workflow.train_all_artifacts(
            train_dirs, seed=seed, epochs=epochs, frame_step=frame_step
        )
        os.makedirs(out, exist_ok=True)
        wanted = artifacts if target == "all" else {target.replace("-", "_"): artifacts[target.replace("-", "_")]}
        for name, artifact in wanted.items():
            path = os.path.join(out, f"{name}.nn")
            nnet.save_model(artifact, path)
            click.echo(
                f"{name}: final loss {artifact.metadata['final_loss']:.4f} -> {path}"
            )
    except HighlightsError as e:
        _runtime_error(e)


def _load_predictor(model_dir: str, kind: ModelKind, threshold: float, seed: int):
    def load(name):
        path = os.path.join(model_dir, f"{name}.nn")
        return nnet.load_model(path) if os.path.exists(path) else None

    return build_predictor(
        kind,
        scene_model=load("scene"),
        head_model={
            ModelKind.SingleRandom: lambda: None,
            ModelKind.SingleBinary: lambda: load("single_binary_head"),
            ModelKind.SingleMulticlass: lambda: load("multiclass_head"),
            ModelKind.CascadeRandom: lambda: None,
            ModelKind.CascadeRegression: lambda: load("regressor_head"),
            ModelKind.CascadeBinary: lambda: load("cascade_binary_head"),
        }[kind](),
        threshold=threshold,
        rng_seed=seed,
    )


@main.command()
@click.option("--model-dir", required=True, type=click.Path(exists=True))
@click.option("--video", "video_dir", required=True, type=click.Path(exists=True),
              help="Bundle directory of the video to score.")
@click.option("--out", required=True, type=click.Path())
@click.option("--model", "kind_name", default="cascade-binary", show_default=True,
              type=click.Choice(sorted(KIND_BY_NAME)))
@click.option("--stride", default=5, show_default=True)
@click.option("--threshold", default=0.5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--realtime", is_flag=True, default=False, help="Pace reads at source rate.")
@click.option("--workers", default=None, type=int,
              help="Classify workers [default: cores, capped at 8].")
@click.option("--min-segment", default=15, show_default=True, help="Minimum segment frames.")
@click.option("--merge-gap", default=10, show_default=True, help="Gap-merge window frames.")
def predict(model_dir, video_dir, out, kind_name, stride, threshold, seed, realtime,
            workers, min_segment, merge_gap):
    """Run the cascaded predictor over one video; write timeline files."""
    from . import pipeline as pl

    try:
        predictor = _load_predictor(model_dir, KIND_BY_NAME[kind_name], threshold, seed)
        config = PipelineConfig(
            stride=stride, highlight_threshold=threshold,
            input_size=predictor.input_size, realtime_pacing=realtime,
            workers=workers or _default_workers(),
        )
        source = pl.open_source(video_dir, mode="image-sequence")
        timeline, report = pl.run_pipeline(source, predictor, config)
        segments = postprocess.extract_segments(
            timeline.score, threshold, min_segment, merge_gap
        )
        os.makedirs(out, exist_ok=True)
        payload = service.timeline_payload(
            timeline.video_id, timeline.num_frames, timeline.fps,
            [scene_code(s) for s in timeline.scene], timeline.score,
            timeline.sampled_indices, segments,
        )
        payload["header"] = {"model": kind_name, "stride": stride, "threshold": threshold}
        with open(os.path.join(out, "timeline.json"), "w") as f:
            json.dump(payload, f, sort_keys=True)
        with open(os.path.join(out, "segments.csv"), "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["start_frame", "end_frame", "peak_score", "mean_score"])
            for s in segments:
                writer.writerow([s.start_frame, s.end_frame,
                                 format_score(s.peak_score), format_score(s.mean_score)])
        with open(os.path.join(out, "throughput.json"), "w") as f:
            json.dump(report.to_dict(), f, sort_keys=True)
        click.echo(
            f"{timeline.video_id}: {len(segments)} segments, "
            f"{report.fps_processed:.1f} FPS processed "
            f"(need {report.realtime_required_fps:.1f}, "
            f"realtime_ok={report.realtime_ok}, dropped={report.dropped_frames})"
        )
    except HighlightsError as e:
        _runtime_error(e)


@main.command("eval")
@click.option("--model-dir", required=True, type=click.Path(exists=True))
@click.option("--corpus-dir", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--model", "kind_name", required=True, type=click.Choice(sorted(KIND_BY_NAME)))
@click.option("--stride", default=5, show_default=True)
@click.option("--threshold", default=0.5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--workers", default=None, type=int,
              help="Pipeline workers [default: cores, capped at 8].")
def eval_cmd(model_dir, corpus_dir, out, kind_name, stride, threshold, seed, workers):
    """Evaluate one model kind on the test split; write one EvalRow."""
    try:
        predictor = _load_predictor(model_dir, KIND_BY_NAME[kind_name], threshold, seed)
        dirs = workflow.video_dirs(corpus_dir)
        ids = [os.path.basename(d) for d in dirs]
        split = corpus.split_dataset(ids, seed=seed)
        by_id = dict(zip(ids, dirs))
        test_dirs = [by_id[v] for v in split.test]
        labels = {v: workflow.dense_ground_truth(by_id[v]) for v in split.test}
        config = PipelineConfig(
            stride=stride, highlight_threshold=threshold,
            input_size=predictor.input_size, workers=workers or _default_workers(),
        )
        row = evaluation.evaluate_model(predictor, test_dirs, config, labels)
        evaluation.write_report([row], out)
        click.echo(
            f"{row.model}: AP {row.ap_percent:.2f}% recall {row.recall_percent:.2f}% "
            f"at {row.fps:.1f} FPS"
        )
    except HighlightsError as e:
        _runtime_error(e)


@main.command()
@click.option("--corpus-dir", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=6, show_default=True)
@click.option("--frame-step", default=3, show_default=True)
@click.option("--stride", default=5, show_default=True)
@click.option("--threshold", default=0.5, show_default=True)
@click.option("--workers", default=None, type=int,
              help="Pipeline workers [default: cores, capped at 8].")
def bench(corpus_dir, out, seed, epochs, frame_step, stride, threshold, workers):
    """Train once and evaluate all six model kinds (report.csv + report.txt)."""
    try:
        rows, _, _ = workflow.run_benchmark_suite(
            corpus_dir, out, seed=seed, epochs=epochs, frame_step=frame_step,
            stride=stride, threshold=threshold, workers=workers or _default_workers(),
        )
        for row in rows:
            click.echo(
                f"{row.model:<20} AP {row.ap_percent:6.2f}%  "
                f"recall {row.recall_percent:6.2f}%  {row.fps:8.1f} FPS"
            )
        click.echo(f"report written to {os.path.join(out, 'report.csv')}")
    except HighlightsError as e:
        _runtime_error(e)


@main.command()
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True),
              help="highlight_levels.csv with multi-annotator rows.")
@click.option("--scene-labels", "scene_path", default=None, type=click.Path(exists=True),
              help="scene_labels.csv to restrict frames to game play.")
@click.option("--best", default=3, show_default=True, help="Size of the best subset.")
def alpha(labels_path, scene_path, best):
    """Cronbach's alpha of an annotation file plus the best-k subset."""
    try:
        matrix = _load_matrix(labels_path, scene_path)
        a = annotation.matrix_alpha(matrix)
        click.echo(f"alpha (all {len(matrix.annotator_ids)} annotators): {a:.4f}")
        if len(matrix.annotator_ids) >= best:
            subset = annotation.select_best_k(matrix, best)
            best_alpha = annotation.cronbach_alpha(matrix.rows_for(subset))
            click.echo(f"best {best}: {', '.join(subset)} (alpha {best_alpha:.4f})")
    except HighlightsError as e:
        _runtime_error(e)


@main.command()
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True))
@click.option("--scene-labels", "scene_path", default=None, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(), help="Aggregated track CSV path.")
@click.option("--best", default=3, show_default=True)
@click.option("--tau", default=1.0, show_default=True, help="Binarization threshold.")
def aggregate(labels_path, scene_path, out, best, tau):
    """Average the best-k annotators and write the binarized track."""
    try:
        matrix = _load_matrix(labels_path, scene_path)
        subset = annotation.select_best_k(matrix, best)
        track = annotation.aggregate_scores(matrix, subset)
        binary = annotation.binarize_labels(track.scores, tau)
        with open(out, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["frame_index", "mean_level", "binary_label"])
            for t, s, b in zip(track.frame_indices, track.scores, binary):
                writer.writerow([t, format_score(s), int(b)])
        click.echo(f"aggregated {len(track.frame_indices)} frames from {', '.join(subset)}")
    except HighlightsError as e:
        _runtime_error(e)


def _load_matrix(labels_path: str, scene_path: str | None):
    rows: dict[str, dict[int, int]] = {}
    with open(labels_path) as f:
        next(f)
        for line in f:
            t, annotator, level = line.strip().split(",")
            if annotator == "gt":
                continue
            rows.setdefault(annotator, {})[int(t)] = int(level)
    if not rows:
        raise HighlightsError("no non-gt annotator rows in labels file")
    gameplay: set[int] | None = None
    if scene_path:
        gameplay = set()
        with open(scene_path) as f:
            next(f)
            for line in f:
                t, code = line.strip().split(",")
                if int(code) == 0:
                    gameplay.add(int(t))
    common = set.intersection(*(set(r) for r in rows.values()))
    if gameplay is not None:
        common &= gameplay
    frames = tuple(sorted(common))
    ids = tuple(sorted(rows))
    levels = np.array([[rows[a][t] for t in frames] for a in ids], dtype=np.int64)
    return annotation.AnnotationMatrix(ids, frames, levels)


@main.command("round")
@click.option("--store", "store_root", required=True, type=click.Path(exists=True),
              envvar="HF_STORE")
def round_cmd(store_root):
    """Run one machine-in-the-loop round against a store directory."""
    try:
        store = service.Store(store_root)
        raw = store.read_json("rounds", "_state")
        if raw is None:
            state = annotation.RoundState(video_order=tuple(store.video_ids()))
        else:
            state = annotation.RoundState.from_dict(raw)
        batch = annotation.next_batch(state)
        missing = [v for v in batch if store.read_json("corrections", v) is None]
        if missing:
            raise HighlightsError(f"uncorrected batch videos: {', '.join(missing)}")
        metrics = service._run_round(store, state)
        click.echo(json.dumps(metrics, indent=1, sort_keys=True))
    except HighlightsError as e:
        _runtime_error(e)


@main.command()
@click.option("--store", "store_root", required=True, type=click.Path(exists=True),
              envvar="HF_STORE")
@click.option("--addr", default="127.0.0.1:8775", show_default=True, help="HOST:PORT.")
def serve(store_root, addr):
    """Serve the review API (and the UI, if HF_UI_DIR is set)."""
    import uvicorn

    host, _, port = addr.rpartition(":")
    app = service.create_app(store_root)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")


@main.command()
@click.option("--seed", default=0, show_default=True)
@click.option("--trials", default=5, show_default=True)
@click.option("--epsilon", default=1e-5, show_default=True)
def gradcheck(seed, trials, epsilon):
    """Finite-difference check of the network gradients."""
    rng = np.random.default_rng(np.random.PCG64(seed))
    worst = 0.0
    for trial in range(trials):
        spec = nnet.tinynet_spec(4, input_size=16)
        batch = rng.normal(size=(2, 3, 16, 16))
        labels = rng.integers(0, 4, size=2)
        err = nnet.grad_check(spec, batch, labels, epsilon=epsilon, seed=seed + trial)
        worst = max(worst, err)
        click.echo(f"trial {trial}: max relative error {err:.3e}")
    if worst >= 1e-4:
        click.echo("FAIL: gradient check exceeded 1e-4", err=True)
        sys.exit(2)
    click.echo(f"OK: worst relative error {worst:.3e}")


if __name__ == "__main__":
    main()
