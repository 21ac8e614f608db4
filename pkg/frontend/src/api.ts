/** Typed client for the review service HTTP API. */

export interface VideoRow {
  video_id: string;
  num_frames: number;
  fps: number;
  status: string;
}

export interface SegmentDTO {
  start_frame: number;
  end_frame: number;
  peak_score: string;
  mean_score: string;
}

export interface TimelineDTO {
  video_id: string;
  num_frames: number;
  fps: number;
  scene_codes: number[];
  scores: string[];
  sampled_indices: number[];
  segments: SegmentDTO[];
}

export interface CorrectionsDTO {
  scene: Record<string, number>;
  highlights: [number, string, number][];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (body && body.error) detail = body.error;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export class Client {
  constructor(private base: string = "") {}

  listVideos(): Promise<VideoRow[]> {
    return fetch(`${this.base}/api/videos`).then((r) => asJson<VideoRow[]>(r));
  }

  timeline(videoId: string): Promise<TimelineDTO> {
    return fetch(`${this.base}/api/videos/${videoId}/timeline`).then((r) =>
      asJson<TimelineDTO>(r),
    );
  }

  corrections(videoId: string): Promise<CorrectionsDTO> {
    return fetch(`${this.base}/api/videos/${videoId}/corrections`).then((r) =>
      asJson<CorrectionsDTO>(r),
    );
  }

  /** PUT the exact payload bytes; callers canonicalize via buildPayload. */
  async putCorrections(videoId: string, body: string): Promise<{ correction_effort: string }> {
    const res = await fetch(`${this.base}/api/videos/${videoId}/corrections`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body,
    });
    return asJson(res);
  }

  frameUrl(videoId: string, frameIndex: number): string {
    return `${this.base}/api/frames/${videoId}/${frameIndex}`;
  }
}
