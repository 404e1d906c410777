/** Thin client for the rating service. The fetch implementation is injected
 * so tests can run against an in-memory stub server. */

import type { Ack, NextPayload, Progress, RatingSubmission, SkipSubmission } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private url(path: string, params?: Record<string, string | undefined>): string {
    const query = Object.entries(params ?? {})
      .filter(([, v]) => v !== undefined && v !== "")
      .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(v as string)}`)
      .join("&");
    return `${this.baseUrl}${path}${query ? `?${query}` : ""}`;
  }

  private async get<T>(path: string, params?: Record<string, string | undefined>): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.url(path, params));
    } catch (err) {
      throw new ApiError(`network failure: ${String(err)}`);
    }
    if (!response.ok) {
      throw new ApiError(`HTTP ${response.status} for ${path}`, response.status);
    }
    return (await response.json()) as T;
  }

  async nextInstance(raterId: string, country?: string): Promise<NextPayload> {
    return this.get<NextPayload>("/api/session/next", { rater_id: raterId, country });
  }

  async progress(raterId: string, country?: string): Promise<Progress> {
    return this.get<Progress>("/api/progress", { rater_id: raterId, country });
  }

  async submitRatings(body: Array<RatingSubmission | SkipSubmission>): Promise<Ack> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.url("/api/ratings"), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(`network failure: ${String(err)}`);
    }
    if (!response.ok) {
      throw new ApiError(`HTTP ${response.status} for /api/ratings`, response.status);
    }
    return (await response.json()) as Ack;
  }
}
