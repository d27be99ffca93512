/** Form wiring and the page's status machine.
 *
 * States: idle → loading → ok | degraded | error. Results stay on screen
 * only in ok/degraded; the degraded banner shows exactly when the response
 * says degraded. The submit button is enabled only for a non-blank wish
 * with no request in flight.
 */

import { ApiRequestError, type SearchClient } from "./api.js";
import { clearResults, renderResults } from "./view.js";

export type Status = "idle" | "loading" | "ok" | "degraded" | "error";

export interface AppElements {
  form: HTMLFormElement;
  wish: HTMLInputElement;
  k: HTMLSelectElement;
  validate: HTMLInputElement;
  submit: HTMLButtonElement;
  status: HTMLElement;
  banner: HTMLElement;
  results: HTMLElement;
  corpusMeta: HTMLElement;
}

export function bindElements(root: Document): AppElements {
  const byId = <T extends HTMLElement>(id: string): T => {
    const node = root.getElementById(id);
    if (!node) {
      throw new Error(`missing #${id} in page markup`);
    }
    return node as T;
  };
  return {
    form: byId<HTMLFormElement>("wish-form"),
    wish: byId<HTMLInputElement>("wish-input"),
    k: byId<HTMLSelectElement>("k-select"),
    validate: byId<HTMLInputElement>("validate-toggle"),
    submit: byId<HTMLButtonElement>("submit-button"),
    status: byId("status"),
    banner: byId("degraded-banner"),
    results: byId("results"),
    corpusMeta: byId("corpus-meta"),
  };
}

const K_MAX = 20;
const K_DEFAULT = 5;
const IDLE_MESSAGE = "Enter a goal to find matching 30-day challenges.";

export interface AppController {
  /** Run one search with the current form values; resolves when the DOM has settled. */
  submit(): Promise<void>;
  /** Resolves when the initial health lookup has settled. */
  ready: Promise<void>;
}

export function initApp(elements: AppElements, client: SearchClient): AppController {
  let inFlight = false;

  for (let k = 1; k <= K_MAX; k += 1) {
    const option = document.createElement("option");
    option.value = String(k);
    option.textContent = String(k);
    elements.k.append(option);
  }
  elements.k.value = String(K_DEFAULT);

  function setStatus(state: Status, message: string): void {
    elements.status.dataset.state = state;
    elements.status.textContent = message;
  }

  function setBanner(visible: boolean): void {
    elements.banner.hidden = !visible;
  }

  function syncSubmit(): void {
    elements.submit.disabled = inFlight || elements.wish.value.trim() === "";
  }

  async function run(): Promise<void> {
    const wish = elements.wish.value.trim();
    if (wish === "" || inFlight) {
      return;
    }
    inFlight = true;
    syncSubmit();
    setBanner(false);
    setStatus("loading", "Searching…");
    try {
      const response = await client.search(
        wish,
        Number(elements.k.value),
        elements.validate.checked,
      );
      renderResults(elements.results, response);
      setBanner(response.degraded);
      const count = response.results.length;
      const summary = `${count} result${count === 1 ? "" : "s"} for “${response.query}”`;
      if (response.degraded) {
        setStatus("degraded", `${summary} — served degraded`);
      } else {
        setStatus("ok", summary);
      }
    } catch (error) {
      clearResults(elements.results);
      setBanner(false);
      const message =
        error instanceof ApiRequestError ? error.message : "search failed — is the API up?";
      setStatus("error", message);
    } finally {
      inFlight = false;
      syncSubmit();
    }
  }

  elements.wish.addEventListener("input", syncSubmit);
  elements.form.addEventListener("submit", (event) => {
    event.preventDefault();
    void run();
  });

  setStatus("idle", IDLE_MESSAGE);
  syncSubmit();

  const ready = client
    .health()
    .then((health) => {
      elements.corpusMeta.textContent = `${health.corpus_size} challenges · ${health.provider_tag}`;
    })
    .catch(() => {
      elements.corpusMeta.textContent = "service unreachable";
    });

  return { submit: run, ready };
}
