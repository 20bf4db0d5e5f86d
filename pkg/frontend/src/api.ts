/** Fetch-based client for the studio service HTTP API. */

import type { Design, JobInfo, PredictResponse } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorMessage(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { error?: string };
    return body.error ?? `HTTP ${resp.status}`;
  } catch {
    return `HTTP ${resp.status}`;
  }
}

export class StudioClient {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: body !== undefined ? { "content-type": "application/json" } : undefined,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, await errorMessage(resp));
    }
    return (await resp.json()) as T;
  }

  createDesign(design: Design): Promise<{ id: string }> {
    return this.request("POST", "/designs", design);
  }

  getDesign(id: string): Promise<Design> {
    return this.request("GET", `/designs/${id}`);
  }

  putDesign(id: string, design: Design): Promise<{ id: string; updated: string }> {
    return this.request("PUT", `/designs/${id}`, design);
  }

  predict(id: string): Promise<PredictResponse> {
    return this.request("POST", `/designs/${id}/predict`);
  }

  optimize(
    id: string,
    targets: Record<string, number>,
    config?: Record<string, unknown>,
  ): Promise<{ id: string }> {
    return this.request("POST", `/designs/${id}/optimize`, { targets, ...(config ? { config } : {}) });
  }

  getJob(jobId: string): Promise<JobInfo> {
    return this.request("GET", `/jobs/${jobId}`);
  }

  cancelJob(jobId: string): Promise<{ id: string; state: string }> {
    return this.request("DELETE", `/jobs/${jobId}`);
  }

  reflow(id: string, width: number, height: number, groupOverflow = false): Promise<{ id: string }> {
    return this.request("POST", `/designs/${id}/reflow`, {
      width,
      height,
      group_overflow: groupOverflow,
    });
  }

  eventsUrl(jobId: string): string {
    return `${this.baseUrl}/jobs/${jobId}/events`;
  }
}
