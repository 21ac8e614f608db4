"""Release gate: every criterion runs end to end at its stated tolerance
and prints one pass/fail line. Budgets are wall-clock ceilings, generous
for a laptop CPU; breaching one fails the criterion.
"""

import hashlib
import itertools
import json
import os
import shutil
import subprocess
import sys
import time

import numpy as np
import pytest

from highlights import annotation, corpus, evaluation, nnet, workflow
from highlights.cascade import ModelKind, keyed_uniform
from highlights.core import PipelineConfig, SceneType, scene_code
from highlights.nnet.network import (
    NetworkSpec, batchnorm, conv, fc, flatten, maxpool, relu,
)
from highlights import pipeline as pl
from highlights import postprocess

pytestmark = pytest.mark.acceptance

BENCH_SEED = 0
BENCH_VIDEOS = 8
BENCH_FRAMES = 720


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'}: {name} ({detail})")
    assert ok, f"{name}: {detail}"


def _write_corpus(root, videos: int, seed: int, num_frames: int, size: int) -> None:
    for i in range(videos):
        spec = corpus.default_spec(i, seed=seed, num_frames=num_frames,
                                   width=size, height=size)
        frames, scenes, levels = corpus.generate_video(spec)
        manifest = corpus.validate_manifest({
            "video_id": f"video_{i:04d}", "width": size, "height": size,
            "fps": spec.fps, "num_frames": num_frames,
            "frame_pattern": corpus.FRAME_PATTERN, "format_version": 1,
        })
        bundle = corpus.Bundle(manifest, frames, scenes, levels)
        corpus.write_bundle(bundle, str(root / manifest.video_id))


@pytest.fixture(scope="module")
def bench_env(tmp_path_factory):
    """One reduced-scale corpus + full six-model benchmark, shared by the
    ordering, scene-gate and realtime criteria. Budget: 15 min."""
    root = tmp_path_factory.mktemp("bench")
    corpus_dir = root / "corpus"
    t0 = time.time()
    _write_corpus(corpus_dir, BENCH_VIDEOS, BENCH_SEED, BENCH_FRAMES, 64)
    rows, artifacts, split = workflow.run_benchmark_suite(
        str(corpus_dir), str(root / "bench"), seed=BENCH_SEED,
        epochs=6, frame_step=3, workers=2,
    )
    return {
        "corpus": corpus_dir, "rows": rows, "artifacts": artifacts,
        "split": split, "elapsed": time.time() - t0,
    }


def test_ap_matches_brute_force_reference():
    rng = np.random.default_rng(np.random.PCG64(77))
    t0 = time.time()
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 21))
        labels = rng.integers(0, 2, size=n)
        if labels.sum() == 0:
            labels[int(rng.integers(0, n))] = 1
        scores = np.round(rng.random(n), 1)  # coarse grid forces ties
        order = sorted(range(n), key=lambda i: (-scores[i], i))
        tp = 0
        precisions = []
        for rank, i in enumerate(order, start=1):
            if labels[i] == 1:
                tp += 1
                precisions.append(tp / rank)
        reference = sum(precisions) / labels.sum()
        worst = max(worst, abs(evaluation.average_precision(scores, labels) - reference))
    elapsed = time.time() - t0
    _report("AP oracle equivalence", worst < 1e-12 and elapsed < 5.0,
            f"worst dev {worst:.2e}, {elapsed:.1f}s")


def test_random_baseline_ap_tracks_prevalence():
    # 10,000 frames at prevalence 0.20; random scoring should average out
    # to AP ~ prevalence across seeds
    rng = np.random.default_rng(np.random.PCG64(5))
    labels = np.zeros(10_000, dtype=np.int64)
    labels[rng.choice(10_000, size=2_000, replace=False)] = 1
    t0 = time.time()
    aps = []
    for seed in range(100):
        scores = np.array(
            [keyed_uniform(seed, "calibration", t) for t in range(10_000)]
        )
        aps.append(evaluation.average_precision(scores, labels))
    mean_ap = float(np.mean(aps))
    elapsed = time.time() - t0
    _report("random-baseline calibration", 0.18 <= mean_ap <= 0.22 and elapsed < 30.0,
            f"mean AP {mean_ap:.4f} over 100 seeds, {elapsed:.1f}s")


def test_agreement_alpha_and_best_subset():
    t0 = time.time()
    ok = abs(annotation.cronbach_alpha(np.array([[0, 1, 2, 3]] * 3)) - 1.0) < 1e-15
    ok &= abs(annotation.cronbach_alpha(np.array([[0, 0, 1, 1], [0, 1, 0, 1]]))) < 1e-15
    three_sevenths = annotation.cronbach_alpha(
        np.array([[0, 1, 2, 3], [0, 1, 2, 3], [1, 2, 3, 0]])
    )
    ok &= abs(three_sevenths - 3.0 / 7.0) < 1e-15
    rng = np.random.default_rng(np.random.PCG64(21))
    for trial in range(500):
        k = int(rng.integers(3, 8))
        n = int(rng.integers(4, 10))
        matrix = annotation.AnnotationMatrix(
            annotator_ids=tuple(f"a{i}" for i in range(k)),
            frame_indices=tuple(range(n)),
            levels=rng.integers(0, 4, size=(k, n)),
        )
        best, best_alpha = None, -np.inf
        for subset in itertools.combinations(sorted(matrix.annotator_ids), 3):
            try:
                alpha = annotation.cronbach_alpha(matrix.rows_for(subset))
            except annotation.ZeroTotalVariance:
                continue
            if alpha > best_alpha:
                best, best_alpha = subset, alpha
        if best is None:
            continue
        ok &= annotation.select_best_k(matrix, 3) == best
    elapsed = time.time() - t0
    _report("agreement worked examples + best-3 search", ok and elapsed < 10.0,
            f"alpha(3/7)={three_sevenths:.12f}, 500 matrices, {elapsed:.1f}s")


def test_gradients_match_finite_differences():
    # ~15 trials per layer type + 10 full-network trials = 100 total
    def block(*layers):
        return NetworkSpec(name="probe", input_shape=(3, 8, 8),
                           layers=tuple(layers), num_classes=3)

    per_layer = {
        "fc": block(flatten(), fc(3)),
        "conv": block(conv(4), flatten(), fc(3)),
        "batchnorm-4d": block(conv(4), batchnorm(), flatten(), fc(3)),
        "batchnorm-2d": block(flatten(), fc(8), batchnorm(), fc(3)),
        "relu": block(conv(4), relu(), flatten(), fc(3)),
        "maxpool": block(conv(4), maxpool(), flatten(), fc(3)),
    }
    rng = np.random.default_rng(np.random.PCG64(3))
    t0 = time.time()
    worst = 0.0
    for name, spec in per_layer.items():
        for trial in range(15):
            batch = rng.normal(size=(3, 3, 8, 8))
            labels = rng.integers(0, 3, size=3)
            err = nnet.grad_check(spec, batch, labels, seed=trial)
            worst = max(worst, err)
    full = nnet.tinynet_spec(4, input_size=16)
    for trial in range(10):
        batch = rng.random((2, 3, 16, 16))
        labels = rng.integers(0, 4, size=2)
        worst = max(worst, nnet.grad_check(full, batch, labels, seed=trial))
    elapsed = time.time() - t0
    _report("gradient checks", worst < 1e-4 and elapsed < 60.0,
            f"worst rel err {worst:.2e} over 100 trials, {elapsed:.1f}s")


def test_interpolation_and_sampling_properties():
    rng = np.random.default_rng(np.random.PCG64(9))
    t0 = time.time()
    ok = True
    for _ in range(300):
        n = int(rng.integers(2, 400))
        stride = int(rng.integers(1, 12))
        idx = pl.sample_indices(n, stride)
        ok &= idx[0] == 0 and idx[-1] == n - 1
        ok &= idx == sorted(set(idx))
        ok &= all(i % stride == 0 for i in idx[:-1])
        if stride == 1:
            ok &= idx == list(range(n))
        scores = rng.random(len(idx))
        dense = postprocess.interpolate(list(zip(idx, scores)), n)
        ok &= bool(np.all(dense[idx] == scores))
        ok &= bool(dense.min() >= scores.min() - 1e-12)
        ok &= bool(dense.max() <= scores.max() + 1e-12)
    ok &= pl.sample_indices(23, 5) == [0, 5, 10, 15, 20, 22]
    elapsed = time.time() - t0
    _report("interpolation & sampling", ok and elapsed < 5.0,
            f"300 random cases, {elapsed:.1f}s")


@pytest.mark.slow
def test_scene_gate_pass_line(bench_env):
    artifacts, split = bench_env["artifacts"], bench_env["split"]
    t0 = time.time()
    probs, labels = [], []
    net = artifacts["scene"].network
    for vid in split.test:
        frames, scenes, _ = workflow.load_training_frames(
            str(bench_env["corpus"] / vid), frame_step=1
        )
        for start in range(0, frames.shape[0], 64):
            logits = net.forward(frames[start : start + 64])
            shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
            probs.append(shifted / shifted.sum(axis=1, keepdims=True))
        labels.append(scenes)
    metrics = evaluation.per_class_metrics(np.vstack(probs), np.concatenate(labels))
    worst_ap = min(m["ap"] for m in metrics)
    worst_recall = min(m["recall"] for m in metrics)
    elapsed = time.time() - t0 + bench_env["elapsed"]
    _report("scene gate >=99% per-class AP and recall",
            worst_ap >= 0.99 and worst_recall >= 0.99 and elapsed < 300.0,
            f"min AP {worst_ap:.4f}, min recall {worst_recall:.4f}, "
            f"{len(metrics)} classes, {elapsed:.0f}s incl. training")


@pytest.mark.slow
def test_benchmark_ordering(bench_env):
    rows = {r.model: r for r in bench_env["rows"]}
    positives = 0
    for i in range(BENCH_VIDEOS):
        spec = corpus.default_spec(i, seed=BENCH_SEED, num_frames=BENCH_FRAMES)
        positives += sum(1 for level in spec.highlight_track() if level > 0)
    imbalance = (BENCH_VIDEOS * BENCH_FRAMES - positives) / positives
    cb = rows["cascade-binary"].ap_percent
    others = [rows[k].ap_percent for k in rows if k != "cascade-binary"]
    ordering = all(cb > ap for ap in others)
    random_gain = rows["cascade-random"].ap_percent > rows["single-random"].ap_percent
    nonrandom_recalls = {
        k: rows[k].recall_percent
        for k in ("single-binary", "single-multiclass", "cascade-regression", "cascade-binary")
    }
    regression_lowest = all(
        nonrandom_recalls["cascade-regression"] <= v
        for v in nonrandom_recalls.values()
    )
    ok = (ordering and random_gain and regression_lowest
          and imbalance >= 20.0 and bench_env["elapsed"] < 900.0)
    _report("six-model benchmark ordering", ok,
            f"cascade-binary {cb:.2f} vs max-other {max(others):.2f}, "
            f"random {rows['cascade-random'].ap_percent:.2f}>{rows['single-random'].ap_percent:.2f}, "
            f"regression recall {nonrandom_recalls['cascade-regression']:.2f}, "
            f"imbalance {imbalance:.1f}:1, bench {bench_env['elapsed']:.0f}s")


@pytest.mark.slow
def test_realtime_throughput_floor(bench_env):
    predictor = workflow.build_all_predictors(bench_env["artifacts"])[ModelKind.CascadeBinary]
    video = bench_env["corpus"] / bench_env["split"].test[0]
    config = PipelineConfig(stride=5, highlight_threshold=0.5, input_size=64,
                            realtime_pacing=True)
    t0 = time.time()
    _, report = pl.run_pipeline(pl.open_source(str(video)), predictor, config)
    elapsed = time.time() - t0
    _report("real-time contract", report.fps_processed >= 6.0 and report.realtime_ok,
            f"fps_processed {report.fps_processed:.1f} (floor 6.0), "
            f"dropped {report.dropped_frames}, {elapsed:.0f}s")


@pytest.mark.slow
def test_mitl_effort_decreases(tmp_path):
    t0 = time.time()
    round1, round3 = [], []
    for seed in range(5):
        root = tmp_path / f"mitl{seed}"
        _write_corpus(root / "corpus", 8, 100 + seed, 240, 32)
        efforts = workflow.simulate_mitl(
            str(root / "corpus"), str(root / "models"),
            seed=seed, epochs=3, frame_step=4,
        )
        assert len(efforts) >= 3
        round1.append(efforts[0])
        round3.append(efforts[2])
    m1, m3 = float(np.mean(round1)), float(np.mean(round3))
    elapsed = time.time() - t0
    _report("machine-in-the-loop effort reduction", m3 < m1 and elapsed < 600.0,
            f"round-1 effort {m1:.3f} -> round-3 {m3:.3f} over 5 seeds, {elapsed:.0f}s")


@pytest.mark.slow
def test_end_to_end_determinism(tmp_path):
    t0 = time.time()

    def run(args):
        proc = subprocess.run(
            [sys.executable, "-m", "highlights.cli", *args],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        return proc

    def tree_digest(root, skip=()):
        digest = hashlib.sha256()
        for dirpath, _, files in sorted(os.walk(root)):
            for name in sorted(files):
                if name in skip:
                    continue
                digest.update(name.encode())
                digest.update(open(os.path.join(dirpath, name), "rb").read())
        return digest.hexdigest()

    digests = {"synth": [], "train": [], "predict": [], "bench": []}
    for attempt in ("a", "b"):
        base = tmp_path / attempt
        run(["synth", "--out", str(base / "corpus"), "--videos", "4",
             "--seed", "5", "--frames", "120", "--size", "32"])
        digests["synth"].append(tree_digest(base / "corpus"))
        run(["train", "--corpus-dir", str(base / "corpus"), "--out",
             str(base / "models"), "--target", "all", "--seed", "5",
             "--epochs", "2", "--frame-step", "4"])
        digests["train"].append(tree_digest(base / "models"))
        run(["predict", "--model-dir", str(base / "models"), "--video",
             str(base / "corpus" / "video_0003"), "--out", str(base / "run")])
        digests["predict"].append(tree_digest(base / "run", skip=("throughput.json",)))
        run(["bench", "--corpus-dir", str(base / "corpus"), "--out",
             str(base / "bench"), "--seed", "5", "--epochs", "1",
             "--frame-step", "6"])
        rows = (base / "bench" / "report.csv").read_text().splitlines()
        stable = [",".join(line.split(",")[:3]) for line in rows]  # drop fps column
        digests["bench"].append(hashlib.sha256("\n".join(stable).encode()).hexdigest())
    mismatched = [k for k, (a, b) in digests.items() if a != b]
    elapsed = time.time() - t0
    _report("fixed-seed determinism", not mismatched and elapsed < 600.0,
            f"synth/train/predict/bench digests equal, {elapsed:.0f}s"
            if not mismatched else f"mismatch in {mismatched}")
