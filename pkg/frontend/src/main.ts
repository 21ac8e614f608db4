/** Page wiring: video list, playback loop, hotkeys, submission. */

import { ApiError, Client, type TimelineDTO } from "./api.js";
import {
  assignLevel,
  applyServerCorrections,
  buildPayload,
  clearSelection,
  fetchRate,
  initialState,
  LEVEL_NAMES,
  paintScene,
  pendingCount,
  PLAYBACK_SPEEDS,
  seek,
  SCENE_NAMES,
  setSpeed,
  shiftClick,
  skipToNextGameplay,
  validatePending,
  type ViewState,
} from "./state.js";
import { clearError, drawTimeline, frameAtX, showError } from "./render.js";

const client = new Client("");

const el = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

let state: ViewState | null = null;
let timeline: TimelineDTO | null = null;
let playTimer: number | null = null;
let sceneMode = false;

function status(text: string): void {
  el<HTMLElement>("status").textContent = text;
}

function redraw(): void {
  if (!state || !timeline) return;
  drawTimeline(el<HTMLCanvasElement>("timeline"), timeline, state);
  el<HTMLImageElement>("frame").src = client.frameUrl(state.videoId, state.playhead);
  el<HTMLElement>("playhead-label").textContent =
    `frame ${state.playhead}/${state.numFrames - 1} · ` +
    `${SCENE_NAMES[state.sceneCodes[state.playhead]]} · ` +
    `${pendingCount(state)} pending`;
}

function stopPlayback(): void {
  if (playTimer !== null) {
    window.clearInterval(playTimer);
    playTimer = null;
  }
  if (state) state = { ...state, playing: false };
}

function startPlayback(): void {
  if (!state) return;
  stopPlayback();
  state = { ...state, playing: true };
  // frame-stepped playback: a stalled fetch degrades to slower stepping
  playTimer = window.setInterval(() => {
    if (!state) return;
    if (state.playhead + 1 >= state.numFrames) {
      stopPlayback();
      return;
    }
    state = seek(state, state.playhead + 1);
    redraw();
  }, 1000 / fetchRate(state));
}

async function loadVideo(videoId: string): Promise<void> {
  stopPlayback();
  const panel = el<HTMLElement>("error-panel");
  try {
    const tl = await client.timeline(videoId);
    timeline = tl;
    const annotator = el<HTMLInputElement>("annotator").value || "reviewer";
    state = initialState(videoId, tl.num_frames, tl.fps, [...tl.scene_codes], annotator);
    const server = await client.corrections(videoId);
    state = applyServerCorrections(state, server);
    clearError(panel);
    status(`loaded ${videoId} (${tl.segments.length} segments)`);
    redraw();
  } catch (err) {
    timeline = null;
    state = null;
    if (err instanceof ApiError) showError(panel, err.status, err.message);
    else showError(panel, 0, String(err));
  }
}

async function submit(): Promise<void> {
  if (!state) return;
  const problems = validatePending(state);
  if (problems.length > 0) {
    status(`not submitted: ${problems[0]}`);
    return;
  }
  try {
    const reply = await client.putCorrections(state.videoId, buildPayload(state));
    // server is the single source of truth: re-render from its records
    const server = await client.corrections(state.videoId);
    state = applyServerCorrections(state, server);
    status(`submitted, correction effort ${reply.correction_effort}`);
    redraw();
  } catch (err) {
    if (err instanceof ApiError) status(`submit failed (${err.status}): ${err.message}`);
    else status(`submit failed: ${String(err)}`);
  }
}

function onKey(event: KeyboardEvent): void {
  if (!state || event.target instanceof HTMLInputElement) return;
  if (event.key >= "0" && event.key <= "3") {
    const value = Number(event.key);
    if (sceneMode) {
      state = paintScene(state, value);
      status(`painted ${SCENE_NAMES[value]}`);
    } else {
      const result = assignLevel(state, value);
      state = result.state;
      status(
        result.rejected.length > 0
          ? `level ${value} rejected on ${result.rejected.length} non-game-play frame(s)`
          : `level ${value} (${LEVEL_NAMES[value]})`,
      );
    }
    redraw();
  } else if (event.key === " ") {
    event.preventDefault();
    playTimer === null ? startPlayback() : stopPlayback();
  } else if (event.key === "g") {
    const { state: next, moved } = skipToNextGameplay(state);
    state = next;
    if (!moved) status("no game-play frames ahead");
    redraw();
  } else if (event.key === "s") {
    sceneMode = !sceneMode;
    status(sceneMode ? "scene-correction mode" : "highlight mode");
  } else if (event.key === "Escape") {
    state = clearSelection(state);
    redraw();
  } else if (event.key === "Enter") {
    void submit();
  }
}

async function boot(): Promise<void> {
  const speedSelect = el<HTMLSelectElement>("speed");
  for (const s of PLAYBACK_SPEEDS) {
    const option = document.createElement("option");
    option.value = String(s);
    option.textContent = `${s}x`;
    if (s === 1) option.selected = true;
    speedSelect.appendChild(option);
  }
  speedSelect.addEventListener("change", () => {
    if (!state) return;
    state = setSpeed(state, Number(speedSelect.value));
    if (playTimer !== null) startPlayback(); // re-arm at the new rate
  });

  const canvas = el<HTMLCanvasElement>("timeline");
  canvas.addEventListener("click", (event) => {
    if (!state || !timeline) return;
    const frame = frameAtX(canvas, event.clientX, state.numFrames);
    state = event.shiftKey ? shiftClick(state, frame) : seek(clearSelection(state), frame);
    redraw();
  });

  el<HTMLButtonElement>("submit").addEventListener("click", () => void submit());
  el<HTMLButtonElement>("skip").addEventListener("click", () => {
    if (!state) return;
    state = skipToNextGameplay(state).state;
    redraw();
  });
  document.addEventListener("keydown", onKey);

  const list = el<HTMLSelectElement>("videos");
  const rows = await client.listVideos();
  for (const row of rows) {
    const option = document.createElement("option");
    option.value = row.video_id;
    option.textContent = `${row.video_id} (${row.status})`;
    list.appendChild(option);
  }
  list.addEventListener("change", () => void loadVideo(list.value));
  if (rows.length > 0) {
    list.value = rows[0].video_id;
    await loadVideo(rows[0].video_id);
  }
}

void boot();
