/** Typed client for the challenge-search HTTP API. */

import type { HealthResponse, SearchResponse } from "./types.js";

export interface ApiClientOptions {
  /** API origin, e.g. "http://127.0.0.1:8030"; empty means same-origin. */
  baseUrl?: string;
  /** Injection point for tests; defaults to the global fetch. */
  fetchImpl?: typeof fetch;
}

export class ApiRequestError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly errorType: string,
  ) {
    super(message);
    this.name = "ApiRequestError";
  }
}

export interface SearchClient {
  search(wish: string, k: number, validate: boolean): Promise<SearchResponse>;
  health(): Promise<HealthResponse>;
}

interface ErrorBody {
  error?: { type?: string; message?: string };
}

async function parsePayload(response: Response): Promise<unknown> {
  try {
    return await response.json();
  } catch {
    return undefined;
  }
}

function raiseFor(response: Response, payload: unknown): never {
  const body = (payload ?? {}) as ErrorBody;
  throw new ApiRequestError(
    body.error?.message ?? `request failed with status ${response.status}`,
    response.status,
    body.error?.type ?? "unknown",
  );
}

export function createApiClient(options: ApiClientOptions = {}): SearchClient {
  const baseUrl = (options.baseUrl ?? "").replace(/\/+$/, "");
  const fetchImpl =
    options.fetchImpl ?? ((...args: Parameters<typeof fetch>) => fetch(...args));

  async function getJson(path: string): Promise<unknown> {
    const response = await fetchImpl(`${baseUrl}${path}`);
    const payload = await parsePayload(response);
    if (!response.ok) {
      raiseFor(response, payload);
    }
    return payload;
  }

  return {
    async search(wish: string, k: number, validate: boolean): Promise<SearchResponse> {
      const params = new URLSearchParams({
        q: wish,
        k: String(k),
        validate: String(validate),
      });
      return (await getJson(`/api/search?${params.toString()}`)) as SearchResponse;
    },

    async health(): Promise<HealthResponse> {
      return (await getJson("/api/health")) as HealthResponse;
    },
  };
}
