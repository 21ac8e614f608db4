"""Synthetic corpus generation, bundle IO, dataset splitting."""

import json

import numpy as np
import pytest

from highlights import corpus
from highlights.core import SceneType, scene_code
from highlights.errors import (
    FormatVersionMismatch,
    IoError,
    SpecInvariantViolation,
    TooFewVideos,
)


def _spec(**overrides):
    kw = dict(video_index=0, seed=5, num_frames=60, width=24, height=24)
    kw.update(overrides)
    return corpus.default_spec(**kw)


class TestGenerator:
    def test_deterministic(self):
        a, sa, la = corpus.generate_video(_spec())
        b, sb, lb = corpus.generate_video(_spec())
        np.testing.assert_array_equal(a, b)
        assert sa == sb and la == lb

    def test_label_prevalence_matches_script(self):
        # 30% Other / 20% Replay / 50% GamePlay by construction
        spec = corpus.SynthSpec(
            num_frames=100, fps=30.0, width=16, height=16,
            scene_script=(
                (SceneType.Other, 30),
                (SceneType.GameReplay, 20),
                (SceneType.GamePlay, 50),
            ),
            highlight_script=(), seed=0,
        )
        _, scenes, levels = corpus.generate_video(spec)
        assert scenes[:30] == [SceneType.Other] * 30
        assert scenes[30:50] == [SceneType.GameReplay] * 20
        assert scenes[50:] == [SceneType.GamePlay] * 50
        assert levels == [0] * 100

    def test_zero_intensity_leaves_gameplay_pixels_untouched(self):
        base = corpus.SynthSpec(
            num_frames=20, fps=30.0, width=16, height=16,
            scene_script=((SceneType.GamePlay, 20),),
            highlight_script=((5, 9, 2),),
            effect_intensity=0.0, noise_level=0.0, seed=3,
        )
        frames, _, levels = corpus.generate_video(base)
        assert levels[5:10] == [2] * 5
        # with no effect and no noise a highlight frame equals its neighbors
        np.testing.assert_array_equal(frames[5], frames[4])

    def test_highlight_outside_gameplay_rejected(self):
        bad = corpus.SynthSpec(
            num_frames=10, fps=30.0, width=8, height=8,
            scene_script=((SceneType.Other, 10),),
            highlight_script=((2, 4, 1),), seed=0,
        )
        with pytest.raises(SpecInvariantViolation):
            bad.validate()

    def test_script_length_must_match(self):
        bad = corpus.SynthSpec(
            num_frames=10, fps=30.0, width=8, height=8,
            scene_script=((SceneType.GamePlay, 7),),
            highlight_script=(), seed=0,
        )
        with pytest.raises(SpecInvariantViolation):
            bad.validate()

    def test_imbalance_at_default_scale(self):
        gp = pos = 0
        for i in range(4):
            _, scenes, levels = corpus.generate_video(
                _spec(video_index=i, num_frames=1200, width=16, height=16)
            )
            s = np.array([scene_code(x) for x in scenes])
            l = np.array(levels)
            gp += int((s == 0).sum())
            pos += int(((s == 0) & (l >= 1)).sum())
        assert pos > 0
        assert gp / pos >= 20.0  # rare-positive regime


class TestPpm:
    def test_round_trip(self, rng, tmp_path):
        img = rng.integers(0, 256, size=(9, 7, 3), dtype=np.uint8)
        p = tmp_path / "f.ppm"
        corpus.write_ppm(str(p), img)
        np.testing.assert_array_equal(corpus.read_ppm(str(p)), img)

    def test_binary_magic(self, tmp_path):
        img = np.zeros((2, 2, 3), dtype=np.uint8)
        p = tmp_path / "f.ppm"
        corpus.write_ppm(str(p), img)
        assert p.read_bytes().startswith(b"P6")


class TestBundleIo:
    def test_round_trip(self, tmp_path, rng):
        frames = rng.integers(0, 256, size=(10, 8, 8, 3), dtype=np.uint8)
        manifest = corpus.validate_manifest({
            "video_id": "rt", "width": 8, "height": 8, "fps": 24.0,
            "num_frames": 10, "frame_pattern": corpus.FRAME_PATTERN,
            "format_version": 1,
        })
        scenes = [SceneType.GamePlay] * 6 + [SceneType.Other] * 4
        levels = [0, 0, 1, 1, 0, 0, 0, 0, 0, 0]
        annos = [(2, "a1", 1), (3, "a1", 2)]
        corpus.write_bundle(
            corpus.Bundle(manifest, frames, scenes, levels, annos), str(tmp_path / "rt")
        )
        back = corpus.read_bundle(str(tmp_path / "rt"))
        np.testing.assert_array_equal(back.frames, frames)
        assert back.scene_track == scenes
        assert back.highlight_track == levels
        assert back.annotations == annos

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(IoError):
            corpus.read_manifest(str(tmp_path))

    def test_future_format_version(self, tmp_path):
        d = tmp_path / "v"
        d.mkdir()
        (d / "manifest.json").write_text(json.dumps({
            "video_id": "v", "width": 8, "height": 8, "fps": 30.0,
            "num_frames": 1, "frame_pattern": corpus.FRAME_PATTERN,
            "format_version": 99,
        }))
        with pytest.raises(FormatVersionMismatch):
            corpus.read_manifest(str(d))


class TestSplit:
    def test_exact_ratios_ten(self):
        s = corpus.split_dataset([f"v{i}" for i in range(10)], seed=4)
        assert (len(s.train), len(s.val), len(s.test)) == (6, 2, 2)

    def test_floor_cut_seven(self):
        # cut points floor(7*0.6)=4 and floor(7*0.8)=5
        s = corpus.split_dataset([f"v{i}" for i in range(7)], seed=4)
        assert (len(s.train), len(s.val), len(s.test)) == (4, 1, 2)

    def test_deterministic(self):
        ids = [f"v{i}" for i in range(9)]
        assert corpus.split_dataset(ids, seed=2) == corpus.split_dataset(ids, seed=2)

    def test_partition_is_exact(self):
        ids = [f"v{i}" for i in range(13)]
        s = corpus.split_dataset(ids, seed=0)
        assert sorted(s.train + s.val + s.test) == sorted(ids)

    def test_too_few_videos(self):
        with pytest.raises(TooFewVideos):
            corpus.split_dataset(["a", "b"], seed=0)
