"""Frame sources, stride sampling, and the staged pipeline."""

import io
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from highlights import pipeline
from highlights.cascade import ModelKind, build_predictor, keyed_uniform
from highlights.core import FrameImage, PipelineConfig
from highlights.errors import BadStreamHeader, IoError, PipelineFrameError
from highlights.pipeline import (
    RawStreamSource,
    open_source,
    resize_nearest,
    run_pipeline,
    sample_frames,
    sample_indices,
    write_stream_header,
)


class TestSampleIndices:
    def test_stride_five_with_tail(self):
        assert sample_indices(12, 5) == [0, 5, 10, 11]

    def test_stride_one_identity(self):
        assert sample_indices(7, 1) == list(range(7))

    def test_single_frame(self):
        assert sample_indices(1, 5) == [0]

    def test_no_duplicate_final(self):
        assert sample_indices(11, 5) == [0, 5, 10]

    @given(st.integers(1, 500), st.integers(1, 20))
    def test_properties(self, n, stride):
        idx = sample_indices(n, stride)
        assert idx[0] == 0
        assert idx[-1] == n - 1
        assert idx == sorted(set(idx))
        # every frame is within stride of a sampled one
        assert all(min(abs(t - i) for i in idx) < stride for t in range(n))


class TestRawStream:
    def _stream(self, frames, w=4, h=3, fps=30):
        buf = io.BytesIO()
        write_stream_header(buf, w, h, fps)
        for f in frames:
            buf.write(f.tobytes())
        buf.seek(0)
        return buf

    def test_round_trip(self, rng):
        frames = [rng.integers(0, 256, size=(3, 4, 3), dtype=np.uint8)
                  for _ in range(5)]
        src = RawStreamSource(self._stream(frames))
        got = list(src.iter_frames())
        assert [t for t, _ in got] == [0, 1, 2, 3, 4]
        for (_, img), orig in zip(got, frames):
            np.testing.assert_array_equal(img.to_array(), orig)

    def test_bad_magic(self):
        buf = io.BytesIO(b"NOPE" + struct.pack("<IIII", 4, 3, 30, 1))
        with pytest.raises(BadStreamHeader):
            RawStreamSource(buf)

    def test_zero_fps(self):
        buf = io.BytesIO(b"FRV1" + struct.pack("<IIII", 4, 3, 0, 1))
        with pytest.raises(BadStreamHeader):
            RawStreamSource(buf)

    def test_truncated_frame(self, rng):
        frames = [rng.integers(0, 256, size=(3, 4, 3), dtype=np.uint8)]
        buf = self._stream(frames)
        data = buf.getvalue()[:-5]
        src = RawStreamSource(io.BytesIO(data))
        with pytest.raises(IoError):
            list(src.iter_frames())


class TestOpenSource:
    def test_image_sequence(self, tiny_corpus):
        d = sorted(p for p in tiny_corpus.iterdir())[0]
        src = open_source(str(d))
        assert src.manifest.num_frames == 120
        assert src.read_frame(0).width == 32

    def test_empty_directory(self, tmp_path):
        with pytest.raises(IoError):
            open_source(str(tmp_path))


class TestSampleFrames:
    def test_matches_indices(self, tiny_corpus):
        d = sorted(p for p in tiny_corpus.iterdir())[0]
        src = open_source(str(d))
        got = [t for t, _ in sample_frames(src, 7)]
        assert got == sample_indices(120, 7)


class TestResize:
    def test_identity_when_sizes_match(self, rng):
        arr = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
        x = resize_nearest(FrameImage.from_array(arr), 8)
        np.testing.assert_allclose(x, np.transpose(arr / 255.0, (2, 0, 1)))

    def test_downscale_shape_and_range(self, rng):
        arr = rng.integers(0, 256, size=(31, 17, 3), dtype=np.uint8)
        x = resize_nearest(FrameImage.from_array(arr), 8)
        assert x.shape == (3, 8, 8)
        assert x.min() >= 0.0 and x.max() <= 1.0

    def test_uses_original_pixels_only(self, rng):
        arr = np.full((10, 10, 3), 100, dtype=np.uint8)
        arr[0, 0] = 200
        x = resize_nearest(FrameImage.from_array(arr), 4)
        assert set(np.unique(np.round(x * 255))) <= {100.0, 200.0}


class TestRunPipeline:
    def _source(self, tiny_corpus):
        d = sorted(p for p in tiny_corpus.iterdir())[0]
        return open_source(str(d))

    def _config(self, **kw):
        args = dict(stride=5, input_size=32, workers=1)
        args.update(kw)
        return PipelineConfig(**args)

    def test_dense_output_and_report(self, tiny_corpus):
        p = build_predictor(ModelKind.SingleRandom, rng_seed=0, input_size=32)
        timeline, report = run_pipeline(self._source(tiny_corpus), p, self._config())
        assert timeline.num_frames == 120
        assert report.frames_classified == len(sample_indices(120, 5))
        assert report.realtime_required_fps == pytest.approx(30 / 5)
        # sampled scores survive interpolation untouched
        vid = timeline.video_id
        for t in timeline.sampled_indices:
            assert timeline.score[t] == pytest.approx(keyed_uniform(0, vid, t))

    def test_worker_count_does_not_change_output(self, tiny_corpus):
        p = build_predictor(ModelKind.SingleRandom, rng_seed=1, input_size=32)
        t1, _ = run_pipeline(self._source(tiny_corpus), p, self._config(workers=1))
        t4, _ = run_pipeline(self._source(tiny_corpus), p, self._config(workers=4))
        assert t1.score == t4.score
        assert t1.scene == t4.scene

    def test_error_names_frame_index(self, tiny_corpus):
        p = build_predictor(ModelKind.SingleRandom, rng_seed=0, input_size=32)

        import highlights.pipeline as pl
        orig = pl.predict_array

        def boom(predictor, x, t, vid):
            if t == 35:
                raise ValueError("synthetic failure")
            return orig(predictor, x, t, vid)

        try:
            pl.predict_array = boom
            with pytest.raises(PipelineFrameError) as exc:
                run_pipeline(self._source(tiny_corpus), p, self._config())
        finally:
            pl.predict_array = orig
        assert exc.value.frame_index == 35

    def test_realtime_mode_reports_drops_and_keeps_coverage(self, tiny_corpus):
        p = build_predictor(ModelKind.SingleRandom, rng_seed=0, input_size=32)
        cfg = self._config(realtime_pacing=True, queue_capacity=2)
        timeline, report = run_pipeline(self._source(tiny_corpus), p, cfg)
        assert timeline.num_frames == 120
        assert report.dropped_frames >= 0
        assert len(timeline.score) == 120

    def test_throughput_dict_fields(self, tiny_corpus):
        p = build_predictor(ModelKind.SingleRandom, rng_seed=0, input_size=32)
        _, report = run_pipeline(self._source(tiny_corpus), p, self._config())
        d = report.to_dict()
        assert d["frames_classified"] == report.frames_classified
        assert d["realtime_ok"] == (d["fps_processed"] >= d["realtime_required_fps"])
