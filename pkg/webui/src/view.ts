/** DOM builders for search results. Values only ever pass through
 * textContent, so API content cannot inject markup. Cards are appended in
 * response order — the server owns the ranking, the view never re-sorts. */

import type { SearchResponse, SearchResult } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function resultCard(result: SearchResult): HTMLElement {
  const card = el("article", "card");
  card.dataset.id = result.id;

  const head = el("div", "card-head");
  head.append(el("span", "rank", `#${result.rank}`));
  head.append(el("h3", "card-title", result.title));
  if (result.validated) {
    head.append(el("span", "badge", "validated"));
  }
  card.append(head);

  card.append(el("p", "action", result.daily_action));
  card.append(el("p", "wish", result.wish));
  if (result.description) {
    card.append(el("p", "description", result.description));
  }
  card.append(
    el(
      "p",
      "scores",
      `retrieval ${result.retrieval_score.toFixed(3)} · rerank ${result.rerank_score.toFixed(3)}`,
    ),
  );
  return card;
}

export function renderResults(listEl: HTMLElement, response: SearchResponse): void {
  listEl.replaceChildren(...response.results.map(resultCard));
}

export function clearResults(listEl: HTMLElement): void {
  listEl.replaceChildren();
}
