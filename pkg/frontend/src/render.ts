/** Canvas/DOM rendering of the timeline strip, score curve and overlays. */

import type { TimelineDTO } from "./api.js";
import { effectiveScene, selectedRange, type ViewState } from "./state.js";

export const SCENE_COLORS = ["#3a7d44", "#b8860b", "#4457a5", "#777777"];
const PENDING_SCENE_COLORS = ["#6fd27d", "#ffc04d", "#7d93e8", "#bbbbbb"];
const THRESHOLD = 0.5;

export function drawTimeline(
  canvas: HTMLCanvasElement,
  timeline: TimelineDTO,
  state: ViewState,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  const n = timeline.num_frames;
  const bandTop = height - 14;
  ctx.clearRect(0, 0, width, height);

  // scene band: one colored column per frame, pending repaints brighter
  for (let x = 0; x < width; x++) {
    const t = Math.min(n - 1, Math.floor((x / width) * n));
    const pending = state.pending.scene.has(t);
    const code = effectiveScene(state, t);
    ctx.fillStyle = (pending ? PENDING_SCENE_COLORS : SCENE_COLORS)[code] ?? "#000";
    ctx.fillRect(x, bandTop, 1, 14);
  }

  // segment spans
  ctx.fillStyle = "rgba(255, 215, 0, 0.25)";
  for (const seg of timeline.segments) {
    const x0 = (seg.start_frame / n) * width;
    const x1 = ((seg.end_frame + 1) / n) * width;
    ctx.fillRect(x0, 0, Math.max(1, x1 - x0), bandTop);
  }

  // threshold line
  const yFor = (score: number) => (1 - score) * (bandTop - 4) + 2;
  ctx.strokeStyle = "#cc3333";
  ctx.setLineDash([4, 3]);
  ctx.beginPath();
  ctx.moveTo(0, yFor(THRESHOLD));
  ctx.lineTo(width, yFor(THRESHOLD));
  ctx.stroke();
  ctx.setLineDash([]);

  // dense score curve
  ctx.strokeStyle = "#222222";
  ctx.beginPath();
  for (let x = 0; x < width; x++) {
    const t = Math.min(n - 1, Math.floor((x / width) * n));
    const y = yFor(parseFloat(timeline.scores[t]));
    if (x === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  }
  ctx.stroke();

  // pending highlight levels as ticks above the band
  ctx.fillStyle = "#d9480f";
  for (const [t, level] of state.pending.levels) {
    const x = (t / n) * width;
    ctx.fillRect(x, bandTop - 4 - level * 3, 2, 4 + level * 3);
  }

  // selection + playhead
  const [a, b] = selectedRange(state);
  if (state.selectionAnchor !== null) {
    ctx.fillStyle = "rgba(80, 120, 255, 0.20)";
    ctx.fillRect((a / n) * width, 0, Math.max(1, ((b - a + 1) / n) * width), height);
  }
  ctx.fillStyle = "#000000";
  ctx.fillRect((state.playhead / n) * width, 0, 2, height);
}

export function frameAtX(canvas: HTMLCanvasElement, clientX: number, numFrames: number): number {
  const rect = canvas.getBoundingClientRect();
  const frac = (clientX - rect.left) / rect.width;
  return Math.max(0, Math.min(numFrames - 1, Math.floor(frac * numFrames)));
}

export function showError(panel: HTMLElement, status: number, message: string): void {
  panel.hidden = false;
  panel.textContent =
    status === 409
      ? "No prediction yet for this video — run a round first."
      : `Error ${status}: ${message}`;
}

export function clearError(panel: HTMLElement): void {
  panel.hidden = true;
  panel.textContent = "";
}
