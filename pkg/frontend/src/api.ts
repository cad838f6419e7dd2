/**
 * Thin typed client for the annotation service REST API.
 *
 * Every call goes through one request helper that attaches the bearer
 * token and maps non-2xx responses to ApiError, keeping the HTTP status
 * available to callers: 409 means a stale revision, 422 a rejected
 * payload. The fetch function is injectable so tests can fake the wire.
 */

import type {
  AnnotationDraft,
  AnnotationsPayload,
  ImageInfo,
  JobInfo,
  LoginResult,
  MaskResult,
  Page,
  ProjectInfo,
  ProjectMode,
  StatsBody,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, detail: unknown) {
    super(detailText(detail) || `request failed with status ${status}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

/** Flatten the server's {detail} payloads (string or list) to one line. */
export const detailText = (detail: unknown): string => {
  if (typeof detail === "string") return detail;
  if (Array.isArray(detail)) return detail.map((d) => detailText(d)).join("; ");
  if (detail && typeof detail === "object" && "detail" in detail) {
    return detailText((detail as { detail: unknown }).detail);
  }
  if (detail && typeof detail === "object" && "msg" in detail) {
    return String((detail as { msg: unknown }).msg);
  }
  return detail == null ? "" : String(detail);
};

export interface ApiClientOptions {
  baseUrl?: string;
  fetchFn?: FetchLike;
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;
  private token: string | null = null;

  constructor(options: ApiClientOptions = {}) {
    this.baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
    this.fetchFn = options.fetchFn ?? ((url, init) => fetch(url, init));
  }

  setToken(token: string | null): void {
    this.token = token;
  }

  get authenticated(): boolean {
    return this.token !== null;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    let payload: string | undefined;
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      payload = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers,
      body: payload,
    });
    if (!response.ok) {
      let detail: unknown = null;
      try {
        detail = await response.json();
      } catch {
        detail = null;
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async login(username: string, password: string): Promise<LoginResult> {
    const result = await this.request<LoginResult>("POST", "/api/login", {
      username,
      password,
    });
    this.token = result.token;
    return result;
  }

  listProjects(): Promise<Page<ProjectInfo>> {
    return this.request("GET", "/api/projects");
  }

  getProject(projectId: number): Promise<ProjectInfo> {
    return this.request("GET", `/api/projects/${projectId}`);
  }

  createProject(
    name: string,
    mode: ProjectMode,
    classes: string[],
  ): Promise<ProjectInfo> {
    return this.request("POST", "/api/projects", { name, mode, classes });
  }

  listImages(
    projectId: number,
    options: { status?: string; limit?: number; offset?: number } = {},
  ): Promise<Page<ImageInfo>> {
    const params = new URLSearchParams();
    if (options.status) params.set("status", options.status);
    if (options.limit !== undefined) params.set("limit", String(options.limit));
    if (options.offset !== undefined) params.set("offset", String(options.offset));
    const query = params.toString();
    return this.request("GET", `/api/projects/${projectId}/images${query ? `?${query}` : ""}`);
  }

  /** URL for an <img> tag; the browser sends no header, so include the token. */
  imageFileUrl(imageId: number): string {
    return `${this.baseUrl}/api/images/${imageId}/file`;
  }

  async fetchImageBlob(imageId: number): Promise<Blob> {
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchFn(this.imageFileUrl(imageId), { headers });
    if (!response.ok) throw new ApiError(response.status, null);
    return response.blob();
  }

  getAnnotations(imageId: number): Promise<AnnotationsPayload> {
    return this.request("GET", `/api/images/${imageId}/annotations`);
  }

  putAnnotations(
    imageId: number,
    revision: number,
    items: AnnotationDraft[],
  ): Promise<AnnotationsPayload> {
    return this.request("PUT", `/api/images/${imageId}/annotations`, { revision, items });
  }

  requestMask(
    imageId: number,
    seed: { point?: [number, number]; box?: [number, number, number, number] },
    minPoints = 3,
  ): Promise<MaskResult> {
    return this.request("POST", `/api/images/${imageId}/mask`, {
      point: seed.point ?? null,
      box: seed.box ?? null,
      min_points: minPoints,
    });
  }

  async startPreannotate(projectId: number, workers = 1): Promise<JobInfo> {
    const result = await this.request<{ job: JobInfo }>(
      "POST",
      `/api/projects/${projectId}/preannotate`,
      { workers },
    );
    return result.job;
  }

  async startExport(
    projectId: number,
    format: string,
    includePending = false,
  ): Promise<JobInfo> {
    const params = new URLSearchParams({
      format,
      include_pending: includePending ? "true" : "false",
    });
    const result = await this.request<{ job: JobInfo }>(
      "POST",
      `/api/projects/${projectId}/export?${params}`,
    );
    return result.job;
  }

  getJob(jobId: string): Promise<JobInfo> {
    return this.request("GET", `/api/jobs/${jobId}`);
  }

  getStats(projectId: number): Promise<StatsBody> {
    return this.request("GET", `/api/projects/${projectId}/stats`);
  }
}
