"""Streaming ingestion and staged real-time execution.

Stages (read -> resize -> classify -> assemble) are connected by bounded
queues. The predictor must be usable read-only from multiple classify
workers; the assembler is the single writer of the timeline and reorders
results by frame index, so output is identical with 1 or k workers.

In realtime mode the reader releases sampled frames at source rate
(fps / stride) and never blocks: when the classify stage is saturated it
drops the newest frame and counts it.
"""

from __future__ import annotations

import os
import queue
import struct
import threading
import time
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import postprocess
from .cascade import Predictor, predict_array
from .core import FrameImage, PipelineConfig, SceneType, Timeline, VideoManifest
from .corpus import read_manifest, read_ppm
from .errors import BadStreamHeader, IoError, PipelineFrameError

STREAM_MAGIC = b"FRV1"


@dataclass
class FrameSource:
    """Yields frames strictly in increasing frame_index order."""

    manifest: VideoManifest
    mode: str  # "image-sequence" | "raw-stream"
    _directory: str | None = None

    def read_frame(self, index: int) -> FrameImage:
        raise NotImplementedError

    def iter_frames(self) -> Iterator[tuple[int, FrameImage]]:
        for t in range(self.manifest.num_frames):
            yield t, self.read_frame(t)


class ImageSequenceSource(FrameSource):
    def __init__(self, directory: str):
        manifest = read_manifest(directory)
        super().__init__(manifest=manifest, mode="image-sequence")
        self._directory = directory

    def read_frame(self, index: int) -> FrameImage:
        path = os.path.join(self._directory, self.manifest.frame_pattern % index)
        arr = read_ppm(path)
        return FrameImage.from_array(arr)


class RawStreamSource(FrameSource):
    """Sequential reader of the FRV1 wire format.

    Header: magic ``FRV1``, then little-endian u32 width, height,
    fps_numerator, fps_denominator; frames follow as w*h*3 RGB bytes.
    """

    def __init__(self, stream, video_id: str = "stream"):
        header = stream.read(20)
        if len(header) < 20 or header[:4] != STREAM_MAGIC:
            raise BadStreamHeader(f"bad stream magic: {header[:4]!r}")
        w, h, fps_num, fps_den = struct.unpack("<IIII", header[4:20])
        if w == 0 or h == 0 or fps_num == 0 or fps_den == 0:
            raise BadStreamHeader("zero dimension or fps in stream header")
        self._stream = stream
        self._next_index = 0
        self._frame_bytes = w * h * 3
        self._buffered: list[tuple[int, FrameImage]] = []
        # stream length unknown up-front; num_frames discovered at EOF
        manifest = VideoManifest(
            video_id=video_id,
            fps=fps_num / fps_den,
            width=w,
            height=h,
            num_frames=2**31 - 1,
            frame_pattern="stream:%d",
        )
        super().__init__(manifest=manifest, mode="raw-stream")

    def iter_frames(self) -> Iterator[tuple[int, FrameImage]]:
        while True:
            blob = self._stream.read(self._frame_bytes)
            if not blob:
                return
            if len(blob) != self._frame_bytes:
                raise IoError(f"truncated frame {self._next_index} in stream")
            yield self._next_index, FrameImage(
                width=self.manifest.width, height=self.manifest.height, pixels=blob
            )
            self._next_index += 1


def write_stream_header(stream, width: int, height: int, fps_num: int, fps_den: int = 1):
    stream.write(STREAM_MAGIC)
    stream.write(struct.pack("<IIII", width, height, fps_num, fps_den))


def open_source(uri: str, mode: str = "image-sequence") -> FrameSource:
    if mode == "image-sequence":
        if not os.path.isdir(uri):
            raise IoError(f"not a directory: {uri}")
        return ImageSequenceSource(uri)
    if mode == "raw-stream":
        return RawStreamSource(open(uri, "rb"), video_id=os.path.basename(uri))
    raise ValueError(f"unknown source mode {mode!r}")


def sample_indices(num_frames: int, stride: int) -> list[int]:
    """{0, stride, 2*stride, ...} plus the final frame, deduplicated."""
    out = list(range(0, num_frames, stride))
    if out[-1] != num_frames - 1:
        out.append(num_frames - 1)
    return out


def sample_frames(source: FrameSource, stride: int) -> Iterator[tuple[int, FrameImage]]:
    """Yield every stride-th frame plus the final one, in order.

    The final frame is detected at end of iteration so raw streams, whose
    length is only known at EOF, are handled the same way.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    tail: tuple[int, FrameImage] | None = None
    for t, frame in source.iter_frames():
        if t % stride == 0:
            yield t, frame
            tail = None
        else:
            tail = (t, frame)
    if tail is not None:
        yield tail


def resize_nearest(frame: FrameImage, size: int) -> np.ndarray:
    """Nearest-neighbor resize to (3, size, size), normalized to [0, 1]."""
    arr = frame.to_array()
    h, w = arr.shape[:2]
    if (h, w) != (size, size):
        rows = (np.arange(size) * h // size).clip(0, h - 1)
        cols = (np.arange(size) * w // size).clip(0, w - 1)
        arr = arr[rows][:, cols]
    return np.transpose(arr.astype(np.float64) / 255.0, (2, 0, 1))


@dataclass(frozen=True)
class ThroughputReport:
    frames_classified: int
    wall_time_s: float
    fps_processed: float
    realtime_required_fps: float
    realtime_ok: bool
    dropped_frames: int = 0
    scene_evals: int = 0
    head_evals: int = 0

    def to_dict(self) -> dict:
        return {
            "frames_classified": self.frames_classified,
            "wall_time_s": self.wall_time_s,
            "fps_processed": self.fps_processed,
            "realtime_required_fps": self.realtime_required_fps,
            "realtime_ok": self.realtime_ok,
            "dropped_frames": self.dropped_frames,
            "scene_evals": self.scene_evals,
            "head_evals": self.head_evals,
            # fps_processed counts classified (sampled) frames only
            "fps_definition": "classified frames per wall-clock second",
        }


_SENTINEL = object()


def run_pipeline(
    source: FrameSource, predictor: Predictor, config: PipelineConfig
) -> tuple[Timeline, ThroughputReport]:
    """Run read -> resize -> classify -> assemble over the sampled frames."""
    manifest = source.manifest
    video_id = manifest.video_id
    predictor.reset_counts()

    resize_q: queue.Queue = queue.Queue(maxsize=config.queue_capacity)
    classify_q: queue.Queue = queue.Queue(maxsize=config.queue_capacity)
    results: dict[int, tuple[SceneType, float]] = {}
    errors: list[PipelineFrameError] = []
    dropped = [0]
    results_lock = threading.Lock()

    release_interval = config.stride / manifest.fps if config.realtime_pacing else 0.0

    def reader():
        try:
            next_release = time.monotonic()
            for t, frame in sample_frames(source, config.stride):
                if config.realtime_pacing:
                    now = time.monotonic()
                    if now < next_release:
                        time.sleep(next_release - now)
                    next_release += release_interval
                    try:
                        resize_q.put_nowait((t, frame))
                    except queue.Full:
                        dropped[0] += 1
                else:
                    resize_q.put((t, frame))
        except Exception as e:  # noqa: BLE001 - surfaced via errors list
            errors.append(e if isinstance(e, PipelineFrameError) else PipelineFrameError(-1, e))
        finally:
            resize_q.put(_SENTINEL)

    def resizer():
        while True:
            item = resize_q.get()
            if item is _SENTINEL:
                for _ in range(max(1, config.workers)):
                    classify_q.put(_SENTINEL)
                return
            t, frame = item
            try:
                classify_q.put((t, resize_nearest(frame, config.input_size)))
            except Exception as e:  # noqa: BLE001
                errors.append(PipelineFrameError(t, e))

    def classifier():
        while True:
            item = classify_q.get()
            if item is _SENTINEL:
                return
            t, x = item
            try:
                scene_pred, hl_pred = predict_array(predictor, x, t, video_id)
            except Exception as e:  # noqa: BLE001
                errors.append(PipelineFrameError(t, e))
                continue
            with results_lock:
                results[t] = (scene_pred.scene, hl_pred.score)

    start = time.perf_counter()
    threads = [threading.Thread(target=reader), threading.Thread(target=resizer)]
    threads += [threading.Thread(target=classifier) for _ in range(max(1, config.workers))]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    wall = time.perf_counter() - start

    if errors:
        raise errors[0]

    # assemble: single writer, ordered by frame index
    sampled = sorted(results)
    if not sampled:
        raise IoError(f"no frames classified for {video_id}")
    if source.mode == "image-sequence":
        num_frames = manifest.num_frames
    else:
        num_frames = sampled[-1] + 1
    scene_samples = [(t, results[t][0]) for t in sampled]
    score_samples = [(t, results[t][1]) for t in sampled]
    # realtime drops can lose the edge samples; pad with nearest values so
    # interpolation still covers [0, num_frames) without extrapolating
    if score_samples[0][0] != 0:
        score_samples.insert(0, (0, score_samples[0][1]))
        scene_samples.insert(0, (0, scene_samples[0][1]))
    if score_samples[-1][0] != num_frames - 1:
        score_samples.append((num_frames - 1, score_samples[-1][1]))
        scene_samples.append((num_frames - 1, scene_samples[-1][1]))
    dense_scores = postprocess.interpolate(score_samples, num_frames)
    dense_scene = postprocess.nearest_scene(scene_samples, num_frames)

    timeline = Timeline(
        video_id=video_id,
        fps=manifest.fps,
        scene=tuple(dense_scene),
        score=tuple(float(s) for s in dense_scores),
        sampled_indices=tuple(sampled),
    )
    scene_evals, head_evals = predictor.evaluation_count()
    frames_classified = len(sampled)
    fps_processed = frames_classified / wall if wall > 0 else float("inf")
    required = manifest.fps / config.stride
    report = ThroughputReport(
        frames_classified=frames_classified,
        wall_time_s=wall,
        fps_processed=fps_processed,
        realtime_required_fps=required,
        realtime_ok=fps_processed >= required,
        dropped_frames=dropped[0],
        scene_evals=scene_evals,
        head_evals=head_evals,
    )
    return timeline, report
