/** Contract tests for the page behavior, run against the real index.html
 * markup: card order mirrors the response order, the submit button is
 * enabled only for a non-blank wish, and the degraded banner appears
 * exactly when the response says degraded. */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it, vi } from "vitest";

import type { SearchClient } from "../src/api.js";
import { ApiRequestError } from "../src/api.js";
import { bindElements, initApp, type AppElements } from "../src/app.js";
import type { SearchResponse, SearchResult } from "../src/types.js";

// cwd is the package root when vitest runs; import.meta.url is not a file:
// URL under the DOM test environment, so resolve from cwd instead.
const PAGE = readFileSync(join(process.cwd(), "public", "index.html"), "utf-8");
const BODY = /<body>([\s\S]*)<\/body>/.exec(PAGE)![1];

const HEALTH = { status: "ok", corpus_size: 26, provider_tag: "mock-embed:dim=64:seed=0" };

function result(overrides: Partial<SearchResult> = {}): SearchResult {
  return {
    id: "c00001",
    rank: 1,
    title: "30-Day Water Challenge",
    daily_action: "Drink 8 glasses of water",
    wish: "I want to stay hydrated",
    description: "Carry a bottle everywhere.",
    retrieval_score: 0.91,
    rerank_score: 0.88,
    validated: true,
    ...overrides,
  };
}

function response(results: SearchResult[], degraded = false): SearchResponse {
  return { query: "test wish", degraded, results };
}

function setup(searchImpl?: SearchClient["search"]) {
  document.body.innerHTML = BODY;
  const search = vi.fn(searchImpl ?? (async () => response([result()])));
  const client: SearchClient = { search, health: vi.fn(async () => HEALTH) };
  const elements = bindElements(document);
  const app = initApp(elements, client);
  return { app, elements, search };
}

function type(elements: AppElements, text: string): void {
  elements.wish.value = text;
  elements.wish.dispatchEvent(new Event("input", { bubbles: true }));
}

function cardIds(elements: AppElements): string[] {
  return Array.from(elements.results.querySelectorAll(".card")).map(
    (card) => (card as HTMLElement).dataset.id ?? "",
  );
}

describe("submit enablement", () => {
  it("starts disabled with an empty wish", () => {
    const { elements } = setup();
    expect(elements.submit.disabled).toBe(true);
    expect(elements.status.dataset.state).toBe("idle");
  });

  it("enables once the wish is non-blank and disables again when cleared", () => {
    const { elements } = setup();
    type(elements, "sleep better");
    expect(elements.submit.disabled).toBe(false);
    type(elements, "   ");
    expect(elements.submit.disabled).toBe(true);
  });

  it("ignores a submit with a blank wish", async () => {
    const { app, elements, search } = setup();
    type(elements, "   ");
    await app.submit();
    expect(search).not.toHaveBeenCalled();
    expect(elements.status.dataset.state).toBe("idle");
  });

  it("disables the button while a request is in flight", async () => {
    let release!: (value: SearchResponse) => void;
    const { app, elements } = setup(
      () => new Promise<SearchResponse>((resolve) => (release = resolve)),
    );
    type(elements, "sleep better");
    const pending = app.submit();
    expect(elements.submit.disabled).toBe(true);
    expect(elements.status.dataset.state).toBe("loading");
    release(response([result()]));
    await pending;
    expect(elements.submit.disabled).toBe(false);
  });
});

describe("result rendering", () => {
  it("renders cards in exactly the response order", async () => {
    const shuffled = [
      result({ id: "c00019", rank: 1, title: "C" }),
      result({ id: "c00003", rank: 2, title: "A" }),
      result({ id: "c00011", rank: 3, title: "B" }),
    ];
    const { app, elements } = setup(async () => response(shuffled));
    type(elements, "anything");
    await app.submit();
    expect(cardIds(elements)).toEqual(["c00019", "c00003", "c00011"]);
    expect(elements.status.dataset.state).toBe("ok");
    expect(elements.status.textContent).toContain("3 results");
  });

  it("shows title, action, wish, scores, and the validated badge", async () => {
    const { app, elements } = setup(async () =>
      response([result({ validated: true, retrieval_score: 0.5163977, rerank_score: 0.25 })]),
    );
    type(elements, "water");
    await app.submit();
    const card = elements.results.querySelector(".card")!;
    expect(card.querySelector(".card-title")!.textContent).toBe("30-Day Water Challenge");
    expect(card.querySelector(".action")!.textContent).toBe("Drink 8 glasses of water");
    expect(card.querySelector(".wish")!.textContent).toBe("I want to stay hydrated");
    expect(card.querySelector(".scores")!.textContent).toBe("retrieval 0.516 · rerank 0.250");
    expect(card.querySelector(".badge")!.textContent).toBe("validated");
  });

  it("omits the badge and description when absent", async () => {
    const { app, elements } = setup(async () =>
      response([result({ validated: false, description: "" })]),
    );
    type(elements, "water");
    await app.submit();
    const card = elements.results.querySelector(".card")!;
    expect(card.querySelector(".badge")).toBeNull();
    expect(card.querySelector(".description")).toBeNull();
  });

  it("treats result text as text, not markup", async () => {
    const { app, elements } = setup(async () =>
      response([result({ title: "<img src=x onerror=boom()>" })]),
    );
    type(elements, "water");
    await app.submit();
    expect(elements.results.querySelector("img")).toBeNull();
    expect(elements.results.querySelector(".card-title")!.textContent).toContain("<img");
  });

  it("replaces previous results on the next search", async () => {
    const pages = [
      response([result({ id: "c00001" }), result({ id: "c00002", rank: 2 })]),
      response([result({ id: "c00009" })]),
    ];
    let call = 0;
    const { app, elements } = setup(async () => pages[call++]);
    type(elements, "first");
    await app.submit();
    expect(cardIds(elements)).toEqual(["c00001", "c00002"]);
    type(elements, "second");
    await app.submit();
    expect(cardIds(elements)).toEqual(["c00009"]);
  });
});

describe("degraded banner", () => {
  it("is hidden before any search", () => {
    const { elements } = setup();
    expect(elements.banner.hidden).toBe(true);
  });

  it("shows when the response is degraded and the state becomes degraded", async () => {
    const { app, elements } = setup(async () => response([result()], true));
    type(elements, "sleep");
    await app.submit();
    expect(elements.banner.hidden).toBe(false);
    expect(elements.status.dataset.state).toBe("degraded");
    expect(cardIds(elements)).toEqual(["c00001"]);
  });

  it("hides again when a later response is healthy", async () => {
    const pages = [response([result()], true), response([result()], false)];
    let call = 0;
    const { app, elements } = setup(async () => pages[call++]);
    type(elements, "sleep");
    await app.submit();
    expect(elements.banner.hidden).toBe(false);
    await app.submit();
    expect(elements.banner.hidden).toBe(true);
    expect(elements.status.dataset.state).toBe("ok");
  });
});

describe("error handling", () => {
  it("clears results and shows the server's message on an API error", async () => {
    const pages: Array<() => Promise<SearchResponse>> = [
      async () => response([result()]),
      async () => {
        throw new ApiRequestError("k must be between 1 and 50", 400, "bad_request");
      },
    ];
    let call = 0;
    const { app, elements } = setup(() => pages[call++]());
    type(elements, "sleep");
    await app.submit();
    expect(cardIds(elements)).toHaveLength(1);
    await app.submit();
    expect(cardIds(elements)).toHaveLength(0);
    expect(elements.status.dataset.state).toBe("error");
    expect(elements.status.textContent).toBe("k must be between 1 and 50");
    expect(elements.banner.hidden).toBe(true);
  });

  it("shows a generic message when the request never reached the API", async () => {
    const { app, elements } = setup(async () => {
      throw new TypeError("fetch failed");
    });
    type(elements, "sleep");
    await app.submit();
    expect(elements.status.dataset.state).toBe("error");
    expect(elements.status.textContent).toContain("search failed");
  });
});

describe("form plumbing", () => {
  it("sends the trimmed wish, selected k, and validate toggle to the client", async () => {
    const { app, elements, search } = setup();
    type(elements, "  sleep better  ");
    elements.k.value = "12";
    elements.validate.checked = false;
    await app.submit();
    expect(search).toHaveBeenCalledWith("sleep better", 12, false);
  });

  it("offers k choices 1 through 20 with 5 preselected", () => {
    const { elements } = setup();
    const values = Array.from(elements.k.options).map((option) => option.value);
    expect(values).toEqual(Array.from({ length: 20 }, (_, i) => String(i + 1)));
    expect(elements.k.value).toBe("5");
  });

  it("submitting the form triggers a search", async () => {
    const { elements, search } = setup();
    type(elements, "sleep better");
    elements.form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    await vi.waitFor(() => expect(search).toHaveBeenCalledTimes(1));
  });

  it("shows corpus health once the initial lookup settles", async () => {
    const { app, elements } = setup();
    await app.ready;
    expect(elements.corpusMeta.textContent).toBe("26 challenges · mock-embed:dim=64:seed=0");
  });

  it("reports an unreachable service instead of failing to boot", async () => {
    document.body.innerHTML = BODY;
    const client: SearchClient = {
      search: vi.fn(),
      health: vi.fn(async () => {
        throw new TypeError("fetch failed");
      }),
    };
    const elements = bindElements(document);
    const app = initApp(elements, client);
    await app.ready;
    expect(elements.corpusMeta.textContent).toBe("service unreachable");
  });
});
