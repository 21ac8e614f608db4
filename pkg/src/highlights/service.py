"""HTTP backend for the review UI.

The store lives under ``<root>/_store``; every mutation goes through one
file-based writer lock and lands via write-temp-then-rename, so a crash
mid-write never leaves a truncated record. Score payloads are rendered
as 6-decimal strings so responses are byte-stable.
"""

from __future__ import annotations

import io
import json
import os
import threading
import uuid

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from filelock import FileLock

from . import annotation, corpus, evaluation, workflow
from .core import format_score, scene_code
from .errors import HighlightsError, IoError
from .postprocess import Segment


class Store:
    """Disk-backed records for videos, timelines, corrections and rounds."""

    def __init__(self, root: str):
        self.root = root
        self.state_dir = os.path.join(root, "_store")
        for sub in ("timelines", "pre", "corrections", "rounds", "models"):
            os.makedirs(os.path.join(self.state_dir, sub), exist_ok=True)
        self.lock = FileLock(os.path.join(self.state_dir, ".writer.lock"))

    # --- paths ---

    def video_dir(self, video_id: str) -> str:
        return os.path.join(self.root, video_id)

    def _record(self, kind: str, key: str) -> str:
        return os.path.join(self.state_dir, kind, f"{key}.json")

    # --- json records, atomic writes ---

    def write_json(self, kind: str, key: str, payload: dict) -> None:
        path = self._record(kind, key)
        tmp = path + f".tmp.{os.getpid()}"
        with open(tmp, "w") as f:
            json.dump(payload, f, sort_keys=True)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)

    def read_json(self, kind: str, key: str) -> dict | None:
        path = self._record(kind, key)
        if not os.path.exists(path):
            return None
        with open(path) as f:
            return json.load(f)

    # --- videos ---

    def video_ids(self) -> list[str]:
        out = []
        for name in sorted(os.listdir(self.root)):
            if name.startswith("_"):
                continue
            if os.path.exists(os.path.join(self.root, name, "manifest.json")):
                out.append(name)
        return out

    def manifest(self, video_id: str):
        return corpus.read_manifest(self.video_dir(video_id))

    def status(self, video_id: str) -> str:
        if self.read_json("corrections", video_id) is not None:
            return "corrected"
        if self.read_json("pre", video_id) is not None:
            return "pre-annotated"
        return "unlabeled"


def timeline_payload(video_id, num_frames, fps, scene_codes, scores, sampled, segments):
    return {
        "video_id": video_id,
        "num_frames": num_frames,
        "fps": fps,
        "scene_codes": list(scene_codes),
        "scores": [format_score(s) for s in scores],
        "sampled_indices": list(sampled),
        "segments": [
            {
                "start_frame": s.start_frame,
                "end_frame": s.end_frame,
                "peak_score": format_score(s.peak_score),
                "mean_score": format_score(s.mean_score),
            }
            for s in segments
        ],
    }


def _png_bytes(arr: np.ndarray) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def create_app(store_root: str) -> FastAPI:
    store = Store(store_root)
    app = FastAPI(title="highlights review service")
    app.state.store = store
    round_running = threading.Event()

    @app.exception_handler(HighlightsError)
    async def _domain_error(request: Request, exc: HighlightsError):
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.get("/api/videos")
    def list_videos():
        rows = []
        for vid in store.video_ids():
            try:
                m = store.manifest(vid)
            except HighlightsError as e:
                return JSONResponse(
                    status_code=500, content={"error": str(e), "video_id": vid}
                )
            rows.append(
                {
                    "video_id": vid,
                    "num_frames": m.num_frames,
                    "fps": m.fps,
                    "status": store.status(vid),
                }
            )
        return rows

    @app.get("/api/videos/{video_id}/timeline")
    def get_timeline(video_id: str):
        if video_id not in store.video_ids():
            return JSONResponse(status_code=404, content={"error": "unknown video"})
        record = store.read_json("timelines", video_id)
        if record is None:
            return JSONResponse(
                status_code=409, content={"error": "no prediction yet for this video"}
            )
        return record

    @app.get("/api/videos/{video_id}/pre_annotations")
    def get_pre(video_id: str):
        if video_id not in store.video_ids():
            return JSONResponse(status_code=404, content={"error": "unknown video"})
        record = store.read_json("pre", video_id)
        if record is None:
            return JSONResponse(status_code=409, content={"error": "no pre-annotations yet"})
        return record

    @app.get("/api/videos/{video_id}/corrections")
    def get_corrections(video_id: str):
        if video_id not in store.video_ids():
            return JSONResponse(status_code=404, content={"error": "unknown video"})
        record = store.read_json("corrections", video_id)
        return record if record is not None else {"scene": {}, "highlights": []}

    @app.put("/api/videos/{video_id}/corrections")
    def put_corrections(video_id: str, body: dict):
        if video_id not in store.video_ids():
            return JSONResponse(status_code=404, content={"error": "unknown video"})
        m = store.manifest(video_id)
        scene_corr = body.get("scene", {})
        highlight_rows = body.get("highlights", [])
        try:
            scene_corr = {int(k): int(v) for k, v in scene_corr.items()}
        except (TypeError, ValueError):
            return JSONResponse(status_code=400, content={"error": "bad scene map"})
        for t, code in scene_corr.items():
            if not (0 <= t < m.num_frames):
                return JSONResponse(
                    status_code=400, content={"error": f"frame {t} out of range"}
                )
            if code not in (0, 1, 2, 3):
                return JSONResponse(
                    status_code=400, content={"error": f"bad scene code {code}"}
                )
        cleaned_rows = []
        for row in highlight_rows:
            try:
                t, annotator, level = int(row[0]), str(row[1]), int(row[2])
            except (TypeError, ValueError, IndexError):
                return JSONResponse(status_code=400, content={"error": f"bad row {row!r}"})
            if not (0 <= t < m.num_frames):
                return JSONResponse(
                    status_code=400, content={"error": f"frame {t} out of range"}
                )
            if level not in (0, 1, 2, 3):
                return JSONResponse(status_code=400, content={"error": f"bad level {level}"})
            cleaned_rows.append([t, annotator, level])

        with store.lock:
            pre = store.read_json("pre", video_id)
            if pre is not None:
                base = list(pre["scene_codes"])
            else:
                base = [workflow.DEFAULT_PREANNOTATION] * m.num_frames
            merged = list(base)
            for t, code in scene_corr.items():
                merged[t] = code
            effort = annotation.correction_effort(base, merged)
            record = {
                "video_id": video_id,
                "scene": {str(k): v for k, v in sorted(scene_corr.items())},
                "highlights": sorted(cleaned_rows),
                "merged_scene_codes": merged,
                "correction_effort": format_score(effort),
            }
            store.write_json("corrections", video_id, record)
        return {"correction_effort": format_score(effort), "status": "corrected"}

    @app.post("/api/rounds")
    def post_round():
        if round_running.is_set():
            return JSONResponse(status_code=409, content={"error": "round already running"})
        state_raw = store.read_json("rounds", "_state")
        if state_raw is None:
            state = annotation.RoundState(video_order=tuple(store.video_ids()))
        else:
            state = annotation.RoundState.from_dict(state_raw)
        batch = annotation.next_batch(state)
        uncorrected = [v for v in batch if store.read_json("corrections", v) is None]
        if uncorrected:
            return JSONResponse(
                status_code=422,
                content={"error": "uncorrected batch videos", "videos": uncorrected},
            )
        round_id = uuid.uuid4().hex[:12]
        store.write_json("rounds", round_id, {"status": "running", "metrics": {}})
        round_running.set()

        def work():
            try:
                result = _run_round(store, state)
                store.write_json("rounds", round_id, {"status": "done", "metrics": result})
            except Exception as e:  # noqa: BLE001 - reported via status record
                store.write_json(
                    "rounds", round_id, {"status": "failed", "metrics": {"error": str(e)}}
                )
            finally:
                round_running.clear()

        threading.Thread(target=work, daemon=True).start()
        return {"round_id": round_id}

    @app.get("/api/rounds/{round_id}")
    def get_round(round_id: str):
        record = store.read_json("rounds", round_id)
        if record is None:
            return JSONResponse(status_code=404, content={"error": "unknown round"})
        return record

    @app.get("/api/frames/{video_id}/{frame_index}")
    @app.head("/api/frames/{video_id}/{frame_index}")
    def get_frame(video_id: str, frame_index: int):
        if video_id not in store.video_ids():
            return Response(status_code=404)
        m = store.manifest(video_id)
        if not (0 <= frame_index < m.num_frames):
            return Response(status_code=404)
        path = os.path.join(store.video_dir(video_id), m.frame_pattern % frame_index)
        try:
            arr = corpus.read_ppm(path)
        except IoError:
            return Response(status_code=404)
        return Response(content=_png_bytes(arr), media_type="image/png")

    ui_dir = os.environ.get("HF_UI_DIR")
    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _run_round(store: Store, state: annotation.RoundState) -> dict:
    """Execute one machine-in-the-loop round against the store."""

    def corrected_track(video_id: str) -> list[int]:
        record = store.read_json("corrections", video_id)
        return list(record["merged_scene_codes"])

    def train_fn(labeled_ids):
        frames_list, labels_list = [], []
        for vid in labeled_ids:
            frames, _, _ = workflow.load_training_frames(store.video_dir(vid), frame_step=3)
            track = corrected_track(vid)
            labels_list.append(np.asarray(track[::3][: frames.shape[0]], dtype=np.int64))
            frames_list.append(frames)
        frames = np.concatenate(frames_list)
        labels = np.concatenate(labels_list)
        artifact = workflow.train_scene_model(
            frames, labels, seed=1, epochs=3, input_size=frames.shape[2]
        )
        path = os.path.join(store.state_dir, "models", f"scene_r{state.round_number + 1}.nn")
        from . import nnet

        nnet.save_model(artifact, path)
        return path

    def predict_fn(model_path, vid):
        from . import nnet

        artifact = nnet.load_model(model_path)
        frames, _, _ = workflow.load_training_frames(store.video_dir(vid), frame_step=1)
        codes = []
        for start in range(0, frames.shape[0], 64):
            logits = artifact.network.forward(frames[start : start + 64])
            codes.extend(int(c) for c in logits.argmax(axis=1))
        return codes

    batch = annotation.next_batch(state)
    corrections = {vid: corrected_track(vid) for vid in batch}
    efforts = [
        float(store.read_json("corrections", vid)["correction_effort"]) for vid in batch
    ]
    state.effort_history.append(float(np.mean(efforts)) if efforts else 0.0)
    new_state, pre = annotation.run_mitl_round(state, corrections, train_fn, predict_fn)
    with store.lock:
        for vid, codes in pre.items():
            store.write_json("pre", vid, {"video_id": vid, "scene_codes": codes})
        store.write_json("rounds", "_state", new_state.to_dict())

    # validation AP of the scene model on the just-corrected batch
    from . import nnet

    artifact = nnet.load_model(new_state.model_path)
    val_ap = None
    try:
        frames, labels = [], []
        for vid in batch:
            f, _, _ = workflow.load_training_frames(store.video_dir(vid), frame_step=5)
            track = corrected_track(vid)
            labels.append(np.asarray(track[::5][: f.shape[0]], dtype=np.int64))
            frames.append(f)
        x = np.concatenate(frames)
        y = np.concatenate(labels)
        probs_list = []
        for start in range(0, x.shape[0], 64):
            from .nnet import softmax

            probs_list.append(softmax(artifact.network.forward(x[start : start + 64])))
        probs = np.concatenate(probs_list)
        rows = [
            r for r in evaluation.per_class_metrics(probs, y)
            if np.any(y == r["class"])
        ]
        val_ap = float(np.mean([r["ap"] for r in rows]))
    except HighlightsError:
        pass
    return {
        "round_number": new_state.round_number,
        "effort_history": [format_score(e) for e in new_state.effort_history],
        "scene_validation_ap": format_score(val_ap) if val_ap is not None else None,
        "model_path": new_state.model_path,
        "next_batch": list(new_state.pending),
    }
