/** HTTP client for the QA service (POST /api/ask, GET /api/health, /api/stats). */

import type { AskRequest, AskResponse, HealthResponse, StatsResponse } from "./types";

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number | null = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly timeoutMs: number = 60_000,
  ) {}

  /** POST /api/ask. The returned cancel() aborts the in-flight request. */
  ask(request: AskRequest): { response: Promise<AskResponse>; cancel: () => void } {
    const controller = new AbortController();
    const timer = setTimeout(() => controller.abort(), this.timeoutMs);
    const response = fetch(`${this.baseUrl}/api/ask`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
      signal: controller.signal,
    })
      .then(async (res) => {
        if (!res.ok) {
          let detail = "";
          try {
            detail = JSON.stringify(await res.json());
          } catch {
            /* non-JSON error body */
          }
          throw new ApiError(`ask failed with HTTP ${res.status} ${detail}`, res.status);
        }
        return (await res.json()) as AskResponse;
      })
      .catch((err: unknown) => {
        if (err instanceof ApiError) throw err;
        if ((err as Error).name === "AbortError") {
          throw new ApiError("request cancelled or timed out", null);
        }
        throw new ApiError(`network error: ${(err as Error).message}`, null);
      })
      .finally(() => clearTimeout(timer));
    return { response, cancel: () => controller.abort() };
  }

  async health(): Promise<HealthResponse> {
    const res = await fetch(`${this.baseUrl}/api/health`);
    if (!res.ok) throw new ApiError(`health failed with HTTP ${res.status}`, res.status);
    return (await res.json()) as HealthResponse;
  }

  async stats(): Promise<StatsResponse> {
    const res = await fetch(`${this.baseUrl}/api/stats`);
    if (!res.ok) throw new ApiError(`stats failed with HTTP ${res.status}`, res.status);
    return (await res.json()) as StatsResponse;
  }
}
