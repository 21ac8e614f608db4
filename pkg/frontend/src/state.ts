/** View-model logic for the review page, kept DOM-free for testing.
 *
 * All pending edits live here until submission; the payload builder emits
 * a canonical JSON body so a UI submit is byte-identical to an equivalent
 * direct PUT.
 */

export const PLAYBACK_SPEEDS = [0.25, 0.5, 1, 2, 4, 8] as const;
export type PlaybackSpeed = (typeof PLAYBACK_SPEEDS)[number];

export const GAMEPLAY = 0;
export const SCENE_NAMES = ["game-play", "game-replay", "character-draft", "other"] as const;
export const LEVEL_NAMES = ["non-highlight", "cool", "wow", "OMG"] as const;

export interface PendingCorrections {
  /** frame -> corrected scene code */
  scene: Map<number, number>;
  /** frame -> highlight level, for the selected annotator */
  levels: Map<number, number>;
}

export interface ViewState {
  videoId: string;
  numFrames: number;
  fps: number;
  playhead: number;
  speed: PlaybackSpeed;
  playing: boolean;
  annotatorId: string;
  /** scene codes as predicted by the service */
  sceneCodes: number[];
  pending: PendingCorrections;
  /** anchor for shift-click range selection, null when none */
  selectionAnchor: number | null;
}

export function initialState(
  videoId: string,
  numFrames: number,
  fps: number,
  sceneCodes: number[],
  annotatorId: string,
): ViewState {
  return {
    videoId,
    numFrames,
    fps,
    playhead: 0,
    speed: 1,
    playing: false,
    annotatorId,
    sceneCodes,
    pending: { scene: new Map(), levels: new Map() },
    selectionAnchor: null,
  };
}

/** Scene of a frame with pending corrections taking precedence. */
export function effectiveScene(state: ViewState, frame: number): number {
  const corrected = state.pending.scene.get(frame);
  return corrected !== undefined ? corrected : state.sceneCodes[frame];
}

/** Target frame-fetch rate for the playback loop. */
export function fetchRate(state: ViewState): number {
  return state.fps * state.speed;
}

export function setSpeed(state: ViewState, speed: number): ViewState {
  if (!PLAYBACK_SPEEDS.includes(speed as PlaybackSpeed)) {
    throw new Error(`unsupported speed ${speed}`);
  }
  return { ...state, speed: speed as PlaybackSpeed };
}

export function seek(state: ViewState, frame: number): ViewState {
  if (frame < 0 || frame >= state.numFrames) throw new Error(`frame ${frame} out of range`);
  return { ...state, playhead: frame };
}

/**
 * First frame strictly after the playhead whose (corrected) scene is
 * game-play; null when no such frame remains.
 */
export function nextGameplayFrame(state: ViewState): number | null {
  for (let t = state.playhead + 1; t < state.numFrames; t++) {
    if (effectiveScene(state, t) === GAMEPLAY) return t;
  }
  return null;
}

export function skipToNextGameplay(state: ViewState): { state: ViewState; moved: boolean } {
  const target = nextGameplayFrame(state);
  if (target === null) return { state, moved: false };
  return { state: { ...state, playhead: target }, moved: true };
}

/** Frames covered by the current selection, or just the playhead. */
export function selectedRange(state: ViewState): [number, number] {
  if (state.selectionAnchor === null) return [state.playhead, state.playhead];
  const a = Math.min(state.selectionAnchor, state.playhead);
  const b = Math.max(state.selectionAnchor, state.playhead);
  return [a, b];
}

export function shiftClick(state: ViewState, frame: number): ViewState {
  if (frame < 0 || frame >= state.numFrames) throw new Error(`frame ${frame} out of range`);
  const anchor = state.selectionAnchor === null ? state.playhead : state.selectionAnchor;
  return { ...state, selectionAnchor: anchor, playhead: frame };
}

export function clearSelection(state: ViewState): ViewState {
  return { ...state, selectionAnchor: null };
}

export interface LabelResult {
  state: ViewState;
  /** frames rejected because highlights only exist on game-play */
  rejected: number[];
}

/** Assign a highlight level over the selected range (hotkeys 0-3). */
export function assignLevel(state: ViewState, level: number): LabelResult {
  if (!Number.isInteger(level) || level < 0 || level > 3) {
    throw new Error(`level ${level} out of range`);
  }
  const [a, b] = selectedRange(state);
  const levels = new Map(state.pending.levels);
  const rejected: number[] = [];
  for (let t = a; t <= b; t++) {
    if (effectiveScene(state, t) !== GAMEPLAY) {
      rejected.push(t);
    } else {
      levels.set(t, level);
    }
  }
  return {
    state: { ...state, pending: { ...state.pending, levels } },
    rejected,
  };
}

/** Paint a scene type over the selected range (scene-correction mode). */
export function paintScene(state: ViewState, code: number): ViewState {
  if (!Number.isInteger(code) || code < 0 || code > 3) {
    throw new Error(`scene code ${code} out of range`);
  }
  const [a, b] = selectedRange(state);
  const scene = new Map(state.pending.scene);
  const levels = new Map(state.pending.levels);
  for (let t = a; t <= b; t++) {
    if (state.sceneCodes[t] === code) {
      scene.delete(t); // repainting the predicted scene is not a correction
    } else {
      scene.set(t, code);
    }
    if (code !== GAMEPLAY) levels.delete(t); // levels only exist on game-play
  }
  return { ...state, pending: { ...state.pending, scene, levels } };
}

export function pendingCount(state: ViewState): number {
  return state.pending.scene.size + state.pending.levels.size;
}

/**
 * Canonical PUT body. Key order and row order are fixed (ascending frame)
 * so the serialized bytes match an equivalent hand-written PUT exactly.
 */
export function buildPayload(state: ViewState): string {
  const sceneFrames = [...state.pending.scene.keys()].sort((x, y) => x - y);
  const scene: Record<string, number> = {};
  for (const t of sceneFrames) scene[String(t)] = state.pending.scene.get(t)!;
  const highlights = [...state.pending.levels.entries()]
    .sort((x, y) => x[0] - y[0])
    .map(([t, level]) => [t, state.annotatorId, level]);
  return JSON.stringify({ scene, highlights });
}

/** Mirror of the service-side PUT validation, run before submitting. */
export function validatePending(state: ViewState): string[] {
  const problems: string[] = [];
  for (const [t, code] of state.pending.scene) {
    if (t < 0 || t >= state.numFrames) problems.push(`frame ${t} out of range`);
    if (code < 0 || code > 3) problems.push(`bad scene code ${code} at frame ${t}`);
  }
  for (const [t, level] of state.pending.levels) {
    if (t < 0 || t >= state.numFrames) problems.push(`frame ${t} out of range`);
    if (level < 0 || level > 3) problems.push(`bad level ${level} at frame ${t}`);
    if (effectiveScene(state, t) !== GAMEPLAY) {
      problems.push(`frame ${t} is not game-play`);
    }
  }
  return problems;
}

/** Re-seed local state from server records after a submit or refresh. */
export function applyServerCorrections(
  state: ViewState,
  server: { scene: Record<string, number>; highlights: [number, string, number][] },
): ViewState {
  const sceneCodes = [...state.sceneCodes];
  for (const [key, code] of Object.entries(server.scene)) {
    sceneCodes[Number(key)] = code;
  }
  return {
    ...state,
    sceneCodes,
    pending: { scene: new Map(), levels: new Map() },
    selectionAnchor: null,
  };
}
