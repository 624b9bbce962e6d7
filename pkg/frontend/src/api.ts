/**
 * HTTP client for the figforge job service.
 *
 * Thin typed wrappers over fetch: create and poll jobs, download artifacts,
 * save an edited figure back (raw SVG body), submit the feedback rubric, and
 * read aggregate metrics. The save-back endpoint re-serializes canonically on
 * the server, so a successful PUT followed by a GET returns the same bytes
 * the editor exported.
 */

export type JobStateName = "queued" | "running" | "done" | "failed";

export interface JobState {
  id: string;
  state: JobStateName;
  stage: string | null;
  reason: string | null;
  created: string;
  updated: string;
  feedback_submitted: boolean;
}

export interface CreateJobOptions {
  text?: string;
  /** Base64-encoded PNG style reference. */
  style?: string;
  /** Base64-encoded PNG input for vectorize mode. */
  image?: string;
  mode?: "generate" | "vectorize";
  seed?: number;
}

export interface FeedbackRecord {
  semantic_correctness: number;
  information_completeness: number;
  visual_quality: number;
  style_consistency: number;
  usability: number;
  conversion_correctness: number;
  free_text?: string;
}

export interface MetricSummary {
  n: number;
  histogram: number[];
  mean?: number;
}

export interface FeedbackMetrics {
  n: number;
  metrics: Record<string, MetricSummary>;
  usability: { n: number; positive: number };
}

/** Error carrying the HTTP status and decoded body of a failed request. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
    public readonly body: unknown = undefined,
  ) {
    super(`${status}: ${message}`);
    this.name = "ApiError";
  }
}

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
}

async function errorFrom(response: Response): Promise<ApiError> {
  let body: unknown;
  let message = response.statusText || "request failed";
  try {
    body = await response.json();
    const err = (body as { error?: unknown }).error;
    if (typeof err === "string") {
      message = err;
    }
  } catch {
    // Non-JSON error body; keep the status text.
  }
  return new ApiError(response.status, message, body);
}

export class FigforgeClient {
  /** @param baseUrl Service origin; empty string means same-origin. */
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return this.baseUrl + path;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.url(path), init);
    if (!response.ok) {
      throw await errorFrom(response);
    }
    return (await response.json()) as T;
  }

  /** Submit a generation or vectorization; resolves to the new job id. */
  async createJob(options: CreateJobOptions): Promise<string> {
    const body = await this.json<{ job_id: string }>("/jobs", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(options),
    });
    return body.job_id;
  }

  async getJob(jobId: string): Promise<JobState> {
    return this.json<JobState>(`/jobs/${jobId}`);
  }

  /** Poll until the job reaches a terminal state (done or failed). */
  async pollJob(jobId: string, options: PollOptions = {}): Promise<JobState> {
    const interval = options.intervalMs ?? 500;
    const deadline = Date.now() + (options.timeoutMs ?? 120_000);
    for (;;) {
      const state = await this.getJob(jobId);
      if (state.state === "done" || state.state === "failed") {
        return state;
      }
      if (Date.now() >= deadline) {
        throw new ApiError(0, `timed out waiting for job ${jobId}`);
      }
      await new Promise((resolve) => setTimeout(resolve, interval));
    }
  }

  artifactUrl(jobId: string, name: string): string {
    return this.url(`/jobs/${jobId}/artifacts/${name}`);
  }

  /** Fetch an artifact; the caller picks bytes vs text off the Response. */
  async fetchArtifact(jobId: string, name: string): Promise<Response> {
    const response = await fetch(this.artifactUrl(jobId, name));
    if (!response.ok) {
      throw await errorFrom(response);
    }
    return response;
  }

  /** The served figure as text. Throws ApiError 423 while downloads are gated. */
  async fetchSvg(jobId: string): Promise<string> {
    const response = await this.fetchArtifact(jobId, "final.svg");
    return response.text();
  }

  /** Save an edited figure back; the body is the raw SVG document. */
  async putSvg(jobId: string, svg: string): Promise<void> {
    const response = await fetch(this.url(`/jobs/${jobId}/svg`), {
      method: "PUT",
      headers: { "content-type": "image/svg+xml" },
      body: svg,
    });
    if (!response.ok) {
      throw await errorFrom(response);
    }
  }

  async submitFeedback(jobId: string, record: FeedbackRecord): Promise<void> {
    await this.json(`/jobs/${jobId}/feedback`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(record),
    });
  }

  async metrics(): Promise<FeedbackMetrics> {
    return this.json<FeedbackMetrics>("/metrics/feedback");
  }
}
