"""Command-line interface: flags, outputs, exit codes."""

import json
import subprocess
import sys

import numpy as np
import pytest
from click.testing import CliRunner

from highlights.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def _run(runner, args):
    return runner.invoke(main, args, catch_exceptions=False)


class TestUsage:
    def test_unknown_subcommand_exits_1(self):
        proc = subprocess.run(
            [sys.executable, "-m", "highlights.cli", "nosuchcmd"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 1
        assert "Usage" in proc.stderr or "Usage" in proc.stdout

    def test_missing_required_flag_exits_1(self):
        proc = subprocess.run(
            [sys.executable, "-m", "highlights.cli", "predict"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 1

    def test_help_lists_all_subcommands(self, runner):
        result = _run(runner, ["--help"])
        assert result.exit_code == 0
        for cmd in ("synth", "train", "predict", "eval", "bench", "alpha",
                    "aggregate", "round", "serve", "gradcheck"):
            assert cmd in result.output

    def test_help_shows_defaults(self, runner):
        result = _run(runner, ["synth", "--help"])
        assert "default: 1800" in result.output
        assert "default: hots" in result.output
        result = _run(runner, ["predict", "--help"])
        assert "default: 5" in result.output
        assert "default: 0.5" in result.output


class TestSynth:
    def test_writes_bundles(self, runner, tmp_path):
        result = _run(runner, ["synth", "--out", str(tmp_path / "c"), "--videos", "3",
                               "--seed", "4", "--frames", "30", "--size", "16"])
        assert result.exit_code == 0
        for i in range(3):
            d = tmp_path / "c" / f"video_{i:04d}"
            assert (d / "manifest.json").exists()
            assert (d / "scene_labels.csv").exists()
            assert (d / "highlight_levels.csv").exists()
            assert (d / "frame_000029.ppm").exists()

    def test_bit_reproducible(self, runner, tmp_path):
        for name in ("a", "b"):
            _run(runner, ["synth", "--out", str(tmp_path / name), "--videos", "1",
                          "--seed", "9", "--frames", "20", "--size", "16"])
        fa = (tmp_path / "a" / "video_0000" / "frame_000007.ppm").read_bytes()
        fb = (tmp_path / "b" / "video_0000" / "frame_000007.ppm").read_bytes()
        assert fa == fb


class TestAlphaAggregate:
    @pytest.fixture()
    def labels_csv(self, tmp_path):
        p = tmp_path / "highlight_levels.csv"
        lines = ["frame_index,annotator_id,level"]
        tracks = {
            "a1": [0, 1, 2, 3], "a2": [0, 1, 2, 3],
            "a3": [0, 1, 2, 3], "a4": [3, 2, 1, 0],
        }
        for t in range(4):
            lines.append(f"{t},gt,{[0, 1, 2, 3][t]}")
            for a, track in tracks.items():
                lines.append(f"{t},{a},{track[t]}")
        p.write_text("\n".join(lines) + "\n")
        return p

    def test_alpha_output(self, runner, labels_csv):
        result = _run(runner, ["alpha", "--labels", str(labels_csv)])
        assert result.exit_code == 0
        assert "best 3: a1, a2, a3" in result.output
        assert "alpha 1.0000" in result.output

    def test_aggregate_track(self, runner, labels_csv, tmp_path):
        out = tmp_path / "agg.csv"
        result = _run(runner, ["aggregate", "--labels", str(labels_csv),
                               "--out", str(out)])
        assert result.exit_code == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "frame_index,mean_level,binary_label"
        # best 3 agree exactly: means are the levels themselves
        assert rows[1] == "0,0.000000,0"
        assert rows[4] == "3,3.000000,1"


class TestGradcheckCommand:
    def test_passes(self, runner):
        result = _run(runner, ["gradcheck", "--trials", "2"])
        assert result.exit_code == 0
        assert "OK" in result.output


@pytest.mark.slow
class TestPredictEval:
    @pytest.fixture(scope="class")
    def model_dir(self, tiny_corpus, tmp_path_factory):
        out = tmp_path_factory.mktemp("cli-models")
        runner = CliRunner()
        result = runner.invoke(main, [
            "train", "--corpus-dir", str(tiny_corpus), "--out", str(out),
            "--target", "all", "--epochs", "2", "--frame-step", "6",
        ], catch_exceptions=False)
        assert result.exit_code == 0
        return out

    def test_predict_outputs(self, runner, tiny_corpus, model_dir, tmp_path):
        video = str(sorted(tiny_corpus.iterdir())[0])
        out = tmp_path / "pred"
        result = _run(runner, ["predict", "--model-dir", str(model_dir),
                               "--video", video, "--out", str(out)])
        assert result.exit_code == 0, result.output
        payload = json.loads((out / "timeline.json").read_text())
        assert payload["header"] == {"model": "cascade-binary", "stride": 5,
                                     "threshold": 0.5}
        assert len(payload["scores"]) == 120
        assert (out / "segments.csv").exists()
        report = json.loads((out / "throughput.json").read_text())
        assert report["frames_classified"] == len(payload["sampled_indices"])

    def test_predict_deterministic_artifacts(self, runner, tiny_corpus, model_dir,
                                             tmp_path):
        video = str(sorted(tiny_corpus.iterdir())[0])
        blobs = []
        for name in ("p1", "p2"):
            out = tmp_path / name
            _run(runner, ["predict", "--model-dir", str(model_dir),
                          "--video", video, "--out", str(out)])
            blobs.append((out / "timeline.json").read_bytes()
                         + (out / "segments.csv").read_bytes())
        assert blobs[0] == blobs[1]

    def test_eval_writes_row(self, runner, tiny_corpus, model_dir, tmp_path):
        out = tmp_path / "eval"
        result = _run(runner, ["eval", "--model-dir", str(model_dir),
                               "--corpus-dir", str(tiny_corpus),
                               "--model", "single-random", "--out", str(out)])
        assert result.exit_code == 0, result.output
        text = (out / "report.csv").read_text().splitlines()
        assert text[1].startswith("single-random,")
