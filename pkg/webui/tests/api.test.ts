import { describe, expect, it, vi } from "vitest";

import { ApiRequestError, createApiClient } from "../src/api.js";
import type { SearchResponse } from "../src/types.js";

const SEARCH_RESPONSE: SearchResponse = {
  query: "read more",
  degraded: false,
  results: [],
};

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function clientWith(response: Response) {
  const fetchImpl = vi.fn(async (_input: RequestInfo | URL) => response);
  const client = createApiClient({ baseUrl: "http://api.test:8030", fetchImpl });
  return { client, fetchImpl };
}

describe("search", () => {
  it("requests /api/search with encoded query parameters", async () => {
    const { client, fetchImpl } = clientWith(jsonResponse(SEARCH_RESPONSE));
    await client.search("read more & sleep", 5, true);
    expect(fetchImpl).toHaveBeenCalledTimes(1);
    const url = String(fetchImpl.mock.calls[0][0]);
    expect(url).toBe(
      "http://api.test:8030/api/search?q=read+more+%26+sleep&k=5&validate=true",
    );
  });

  it("passes k and validate=false through", async () => {
    const { client, fetchImpl } = clientWith(jsonResponse(SEARCH_RESPONSE));
    await client.search("w", 12, false);
    expect(fetchImpl.mock.calls[0][0]).toContain("k=12&validate=false");
  });

  it("returns the parsed payload on 200", async () => {
    const { client } = clientWith(jsonResponse(SEARCH_RESPONSE));
    await expect(client.search("read more", 5, true)).resolves.toEqual(SEARCH_RESPONSE);
  });

  it("maps a JSON error body to ApiRequestError", async () => {
    const { client } = clientWith(
      jsonResponse({ error: { type: "bad_request", message: "q must not be empty" } }, 400),
    );
    const failure = client.search("x", 5, true);
    await expect(failure).rejects.toBeInstanceOf(ApiRequestError);
    await failure.catch((error: ApiRequestError) => {
      expect(error.message).toBe("q must not be empty");
      expect(error.status).toBe(400);
      expect(error.errorType).toBe("bad_request");
    });
  });

  it("falls back to a status message when the error body is not JSON", async () => {
    const { client } = clientWith(new Response("gateway down", { status: 503 }));
    await client.search("x", 5, true).then(
      () => {
        throw new Error("expected rejection");
      },
      (error: ApiRequestError) => {
        expect(error.message).toBe("request failed with status 503");
        expect(error.errorType).toBe("unknown");
      },
    );
  });
});

describe("health", () => {
  it("requests /api/health and parses the body", async () => {
    const body = { status: "ok", corpus_size: 26, provider_tag: "mock-embed:dim=64:seed=0" };
    const { client, fetchImpl } = clientWith(jsonResponse(body));
    await expect(client.health()).resolves.toEqual(body);
    expect(fetchImpl.mock.calls[0][0]).toBe("http://api.test:8030/api/health");
  });
});

describe("base URL handling", () => {
  it("strips trailing slashes", async () => {
    const fetchImpl = vi.fn(async (_input: RequestInfo | URL) => jsonResponse(SEARCH_RESPONSE));
    const client = createApiClient({ baseUrl: "http://api.test:8030///", fetchImpl });
    await client.search("w", 1, true);
    expect(fetchImpl.mock.calls[0][0]).toMatch(/^http:\/\/api\.test:8030\/api\/search\?/);
  });

  it("defaults to same-origin paths", async () => {
    const fetchImpl = vi.fn(async (_input: RequestInfo | URL) => jsonResponse(SEARCH_RESPONSE));
    const client = createApiClient({ fetchImpl });
    await client.health();
    expect(fetchImpl.mock.calls[0][0]).toBe("/api/health");
  });
});
