"""Synthetic esports-like corpus: generation, bundle IO, dataset splits.

A bundle directory holds a ``manifest.json``, a binary-PPM image
sequence (``frame_%06d.ppm``), a ``scene_labels.csv`` and a
``highlight_levels.csv``. Generation is fully deterministic for a fixed
(spec, seed): the same call yields byte-identical frames.

The four scene types get visually distinct looks so a small classifier
can separate them, while two deliberate distractors keep the single-model
baselines honest: replay frames re-render gameplay (splashes included)
under a watermark band, and "other" frames occasionally contain bright
blobs that resemble highlight effects.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .core import (
    MANIFEST_FORMAT_VERSION,
    SceneType,
    VideoManifest,
    scene_code,
    validate_manifest,
)
from .errors import (
    BadRatios,
    FormatVersionMismatch,
    IoError,
    SpecInvariantViolation,
    TooFewVideos,
)

FRAME_PATTERN = "frame_%06d.ppm"

# Base palette per scene type (RGB, 0-255). Chosen far apart so pixel
# statistics separate cleanly, as real game vs. non-game scenes do.
_PALETTE = {
    SceneType.GamePlay: (40, 90, 45),
    SceneType.GameReplay: (40, 85, 50),
    SceneType.CharacterDraft: (25, 30, 80),
    SceneType.Other: (95, 70, 60),
}


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic video."""

    num_frames: int
    fps: float
    width: int
    height: int
    scene_script: tuple[tuple[SceneType, int], ...]
    highlight_script: tuple[tuple[int, int, int], ...]  # (start, end incl., level)
    effect_intensity: float = 1.0
    noise_level: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        total = sum(run for _, run in self.scene_script)
        if total != self.num_frames:
            raise SpecInvariantViolation(
                f"scene run-lengths sum to {total}, expected {self.num_frames}"
            )
        scene_track = self.scene_track()
        prev_end = -1
        for start, end, level in sorted(self.highlight_script):
            if start <= prev_end:
                raise SpecInvariantViolation(
                    f"highlight intervals overlap at frame {start}"
                )
            if start > end or start < 0 or end >= self.num_frames:
                raise SpecInvariantViolation(f"bad highlight interval [{start}, {end}]")
            if level not in (1, 2, 3):
                raise SpecInvariantViolation(f"bad highlight level {level}")
            if any(scene_track[t] != SceneType.GamePlay for t in range(start, end + 1)):
                raise SpecInvariantViolation(
                    f"highlight [{start}, {end}] outside a GamePlay run"
                )
            prev_end = end
        if self.effect_intensity < 0 or self.noise_level < 0:
            raise SpecInvariantViolation("effect_intensity and noise_level must be >= 0")

    def scene_track(self) -> list[SceneType]:
        track: list[SceneType] = []
        for scene, run in self.scene_script:
            track.extend([scene] * run)
        return track

    def highlight_track(self) -> list[int]:
        track = [0] * self.num_frames
        for start, end, level in self.highlight_script:
            for t in range(start, end + 1):
                track[t] = level
        return track


def _layout_mask(scene: SceneType, h: int, w: int) -> np.ndarray:
    """Per-scene structural overlay, same every frame (float, HxWx3)."""
    img = np.zeros((h, w, 3), dtype=np.float64)
    if scene in (SceneType.GamePlay, SceneType.GameReplay):
        # HUD bars top and bottom
        bar = max(1, h // 10)
        img[:bar, :, :] = 60.0
        img[-bar:, :, :] = 60.0
        if scene is SceneType.GameReplay:
            # watermark band across the middle
            mid = h // 2
            half = max(1, h // 12)
            img[mid - half : mid + half, :, :] += 90.0
    elif scene is SceneType.CharacterDraft:
        # grid of portrait cells
        step = max(4, w // 8)
        img[::step, :, :] = 80.0
        img[:, ::step, :] = 80.0
    return img


def _splash(h: int, w: int, cx: float, cy: float, radius: float, amp: float) -> np.ndarray:
    """Bright radial blob, the 'splash of light' of a special move."""
    yy, xx = np.mgrid[0:h, 0:w]
    d2 = (yy - cy) ** 2 + (xx - cx) ** 2
    blob = amp * np.exp(-d2 / (2.0 * radius**2))
    return np.stack([blob, blob, blob * 0.8], axis=-1)


def generate_video(spec: SynthSpec):
    """Render one synthetic video.

    Returns (frames, scene_track, highlight_track) where frames is a
    (num_frames, H, W, 3) uint8 array. Deterministic for a fixed seed.
    """
    spec.validate()
    h, w = spec.height, spec.width
    scene_track = spec.scene_track()
    hl_track = spec.highlight_track()
    rng = np.random.default_rng(np.random.PCG64(spec.seed))

    # Static base image per scene type (palette + layout), shared by every
    # frame of that type so zero-noise gameplay frames are identical.
    # Palettes jitter per video (titles look different across broadcasts);
    # the layout masks are the stable cross-video cue.
    # gameplay appearance is stable across broadcasts of the same title;
    # production footage (studio/draft/replay) drifts between videos, and
    # studio/draft segments drift a lot
    palette_jitter = rng.uniform(-40.0, 40.0, size=(4, 3))
    palette_jitter[scene_code(SceneType.GamePlay)] = 0.0
    palette_jitter[scene_code(SceneType.GameReplay)] *= 12.0 / 40.0
    palette_jitter[scene_code(SceneType.CharacterDraft)] *= 20.0 / 40.0
    bases = {}
    for scene in SceneType:
        base = np.empty((h, w, 3), dtype=np.float64)
        base[:, :] = np.asarray(_PALETTE[scene]) + palette_jitter[scene.value]
        base += _layout_mask(scene, h, w)
        bases[scene] = base

    # Pre-draw all per-frame randomness up front in a fixed order so the
    # stream consumption never depends on script contents.
    blob_params = rng.uniform(size=(spec.num_frames, 4))
    noise_seeds = rng.integers(0, 2**63 - 1, size=spec.num_frames)
    splash_pos = {}
    for start, end, level in spec.highlight_script:
        u, v = rng.uniform(size=2)
        splash_pos[(start, end)] = (0.2 * w + 0.6 * w * u, 0.2 * h + 0.6 * h * v)

    frames = np.empty((spec.num_frames, h, w, 3), dtype=np.uint8)
    intervals = sorted(spec.highlight_script)
    for t in range(spec.num_frames):
        scene = scene_track[t]
        img = bases[scene].copy()
        if (scene is SceneType.Other and blob_params[t, 0] < 0.5) or (
            scene is SceneType.GameReplay and blob_params[t, 0] < 0.75
        ) or (scene is SceneType.CharacterDraft and blob_params[t, 0] < 0.5):
            # non-game lookalike flashes (crowd lights, replayed highlights)
            # drawn from the same amplitude/radius family as real splashes,
            # so only scene context separates them from true highlights
            bx = 0.2 * w + 0.6 * w * blob_params[t, 1]
            by = 0.2 * h + 0.6 * h * blob_params[t, 2]
            amp = 35.0 + 105.0 * blob_params[t, 3]
            img += _splash(h, w, bx, by, 0.18 * min(h, w), amp)
        if hl_track[t] > 0 and spec.effect_intensity > 0:
            for start, end, level in intervals:
                if start <= t <= end:
                    cx, cy = splash_pos[(start, end)]
                    amp = 35.0 * level * spec.effect_intensity
                    img += _splash(h, w, cx, cy, 0.18 * min(h, w), amp)
                    break
        if spec.noise_level > 0:
            frame_rng = np.random.default_rng(np.random.PCG64(int(noise_seeds[t])))
            img += frame_rng.normal(0.0, spec.noise_level, size=(h, w, 3))
        frames[t] = np.clip(img, 0, 255).astype(np.uint8)
    return frames, scene_track, hl_track


def default_spec(
    video_index: int,
    seed: int,
    num_frames: int = 1800,
    fps: float = 30.0,
    width: int = 64,
    height: int = 64,
    noise_level: float = 6.0,
    style: str = "hots",
) -> SynthSpec:
    """Scripted spec mirroring the aggregate scene/highlight imbalance.

    Roughly: 30% non-game, 20% replay/draft, 50% gameplay; level-3
    highlights are far rarer than non-highlight gameplay.
    """
    rng = np.random.default_rng(np.random.PCG64((seed << 16) ^ video_index))
    style_shift = {"hots": 0, "lol": 7, "dota2": 13}.get(style, 0)

    script: list[tuple[SceneType, int]] = []
    remaining = num_frames
    toggle = 0
    while remaining > 0:
        if toggle % 2 == 0:
            scene = SceneType.GamePlay
            run = int(rng.integers(num_frames // 8, num_frames // 4))
        else:
            scene = [SceneType.Other, SceneType.GameReplay, SceneType.CharacterDraft][
                int(rng.integers(0, 3))
            ]
            run = int(rng.integers(num_frames // 16, num_frames // 8))
        run = min(run, remaining)
        script.append((scene, run))
        remaining -= run
        toggle += 1

    # Carve highlight intervals inside gameplay runs: mostly level 1,
    # some level 2, rare level 3.
    highlights: list[tuple[int, int, int]] = []
    pos = 0
    for scene, run in script:
        if scene is SceneType.GamePlay and run >= 60:
            # keep highlights rare: non-highlight gameplay dominates by
            # roughly 20:1, echoing the real-world imbalance
            n_intervals = int(rng.integers(0, 2 + run // 200))
            cursor = pos + int(rng.integers(10, max(11, run // 4)))
            for _ in range(n_intervals):
                length = int(rng.integers(9, 14))
                if cursor + length >= pos + run - 5:
                    break
                level = int(rng.choice([1, 1, 1, 2, 2, 3]))
                highlights.append((cursor, cursor + length - 1, level))
                cursor += length + int(rng.integers(80, 160))
        pos += run

    if not highlights:
        # guarantee at least one interval per video so every split has
        # positives; drop it in the longest gameplay run
        pos = 0
        best = None
        for scene, run in script:
            if scene is SceneType.GamePlay and (best is None or run > best[1]):
                best = (pos, run)
            pos += run
        if best is not None and best[1] >= 20:
            start = best[0] + best[1] // 3
            length = int(rng.integers(10, 15))
            highlights.append((start, start + length - 1, 1))

    return SynthSpec(
        num_frames=num_frames,
        fps=fps,
        width=width,
        height=height,
        scene_script=tuple(script),
        highlight_script=tuple(highlights),
        effect_intensity=1.0,
        noise_level=noise_level,
        seed=(seed * 1_000_003 + video_index + style_shift) & 0xFFFFFFFFFFFFFFFF,
    )


# --- PPM image IO ---


def write_ppm(path: str, frame: np.ndarray) -> None:
    h, w, _ = frame.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(frame.astype(np.uint8).tobytes())


def read_ppm(path: str) -> np.ndarray:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise IoError(str(e)) from e
    if not data.startswith(b"P6"):
        raise IoError(f"not a binary PPM file: {path}")
    # header: magic, width, height, maxval, then a single whitespace byte
    fields: list[bytes] = []
    i = 2
    while len(fields) < 3:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if data[i : i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace():
            j += 1
        fields.append(data[i:j])
        i = j
    i += 1
    w, h, maxval = (int(x) for x in fields)
    if maxval != 255:
        raise IoError(f"unsupported PPM maxval {maxval}")
    pixels = data[i : i + w * h * 3]
    if len(pixels) != w * h * 3:
        raise IoError(f"truncated PPM file: {path}")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(h, w, 3).copy()


# --- bundle IO ---


@dataclass
class Bundle:
    """One video on disk: manifest, frames, label tracks."""

    manifest: VideoManifest
    frames: np.ndarray  # (N, H, W, 3) uint8
    scene_track: list[SceneType]
    highlight_track: list[int]
    # multi-annotator rows beyond ground truth: (frame_index, annotator_id, level)
    annotations: list[tuple[int, str, int]] = field(default_factory=list)


def write_bundle(bundle: Bundle, directory: str) -> str:
    """Write a bundle; returns the manifest path."""
    os.makedirs(directory, exist_ok=True)
    m = bundle.manifest
    for t in range(m.num_frames):
        write_ppm(os.path.join(directory, FRAME_PATTERN % t), bundle.frames[t])
    with open(os.path.join(directory, "scene_labels.csv"), "w") as f:
        f.write("frame_index,scene_code\n")
        for t, scene in enumerate(bundle.scene_track):
            f.write(f"{t},{scene_code(scene)}\n")
    with open(os.path.join(directory, "highlight_levels.csv"), "w") as f:
        f.write("frame_index,annotator_id,level\n")
        for t, level in enumerate(bundle.highlight_track):
            f.write(f"{t},gt,{level}\n")
        for t, annotator, level in bundle.annotations:
            f.write(f"{t},{annotator},{level}\n")
    manifest_path = os.path.join(directory, "manifest.json")
    record = {
        "video_id": m.video_id,
        "fps": m.fps,
        "width": m.width,
        "height": m.height,
        "num_frames": m.num_frames,
        "frame_pattern": m.frame_pattern,
        "format_version": MANIFEST_FORMAT_VERSION,
    }
    with open(manifest_path, "w") as f:
        json.dump(record, f, indent=1, sort_keys=True)
        f.write("\n")
    return manifest_path


def read_manifest(directory: str) -> VideoManifest:
    path = os.path.join(directory, "manifest.json")
    try:
        with open(path) as f:
            raw = json.load(f)
    except OSError as e:
        raise IoError(str(e)) from e
    except json.JSONDecodeError as e:
        raise IoError(f"bad manifest json: {e}") from e
    version = int(raw.get("format_version", 1))
    if version > MANIFEST_FORMAT_VERSION:
        raise FormatVersionMismatch(version, MANIFEST_FORMAT_VERSION)
    return validate_manifest(raw)


def read_labels(directory: str):
    """Read (scene_track, highlight_track, annotations) label files."""
    scene_track: dict[int, SceneType] = {}
    path = os.path.join(directory, "scene_labels.csv")
    if os.path.exists(path):
        with open(path) as f:
            next(f)
            for line in f:
                t, code = line.strip().split(",")
                scene_track[int(t)] = SceneType(int(code))
    gt: dict[int, int] = {}
    annotations: list[tuple[int, str, int]] = []
    path = os.path.join(directory, "highlight_levels.csv")
    if os.path.exists(path):
        with open(path) as f:
            next(f)
            for line in f:
                t, annotator, level = line.strip().split(",")
                if annotator == "gt":
                    gt[int(t)] = int(level)
                else:
                    annotations.append((int(t), annotator, int(level)))
    n = len(scene_track)
    scenes = [scene_track[t] for t in range(n)] if scene_track else []
    levels = [gt.get(t, 0) for t in range(n)]
    return scenes, levels, annotations


def read_bundle(directory: str) -> Bundle:
    manifest = read_manifest(directory)
    frames = np.empty(
        (manifest.num_frames, manifest.height, manifest.width, 3), dtype=np.uint8
    )
    for t in range(manifest.num_frames):
        frames[t] = read_ppm(os.path.join(directory, manifest.frame_pattern % t))
    scenes, levels, annotations = read_labels(directory)
    return Bundle(manifest, frames, scenes, levels, annotations)


# --- splits ---


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]


def split_dataset(
    video_ids,
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> DatasetSplit:
    """Shuffle with the seed, then cut at floor(n*r1) and floor(n*(r1+r2)).

    Splitting is always at video granularity.
    """
    ids = list(video_ids)
    if len(ids) < 3:
        raise TooFewVideos(f"need at least 3 videos, got {len(ids)}")
    if any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise BadRatios(f"ratios must be positive and sum to 1: {ratios}")
    rng = np.random.default_rng(np.random.PCG64(seed))
    order = rng.permutation(len(ids))
    shuffled = [ids[i] for i in order]
    n = len(ids)
    cut1 = math.floor(n * ratios[0])
    cut2 = math.floor(n * (ratios[0] + ratios[1]))
    return DatasetSplit(
        train=tuple(shuffled[:cut1]),
        val=tuple(shuffled[cut1:cut2]),
        test=tuple(shuffled[cut2:]),
    )
