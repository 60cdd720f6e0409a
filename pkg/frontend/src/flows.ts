/** Page flows: wire user intent to the API and fold results into view state. */

import { ApiClient, ApiError } from "./api.js";
import type { Basket } from "./basket.js";
import type { SearchViewState } from "./viewmodel.js";

function isAbort(err: unknown): boolean {
  return err instanceof DOMException && err.name === "AbortError";
}

/**
 * Run a search and return the next view state, or null when this call was
 * superseded by a newer one. An empty query never reaches the API: it yields
 * an inline validation message instead.
 */
export async function runSearch(
  client: ApiClient,
  state: SearchViewState,
  query: string,
  wSparse: number,
): Promise<SearchViewState | null> {
  const trimmed = query.trim();
  if (trimmed === "") {
    return { ...state, query, wSparse, hits: [], pending: false, error: "enter a query first" };
  }
  try {
    const response = await client.search(trimmed, wSparse);
    return { query, wSparse, hits: response.hits, pending: false, error: null };
  } catch (err) {
    if (isAbort(err)) {
      return null;
    }
    const message = err instanceof ApiError ? err.message : "search request failed";
    return { ...state, query, wSparse, pending: false, error: message };
  }
}

export type DownloadResult =
  | { ok: true; blob: Blob; fileName: string }
  | { ok: false; error: string };

/**
 * Download the current selection as a ZIP. The basket is cleared only after
 * the server answered successfully; any error leaves it untouched so the user
 * can retry or prune the stale entry.
 */
export async function downloadSelection(client: ApiClient, basket: Basket): Promise<DownloadResult> {
  const pids = basket.list();
  if (pids.length === 0) {
    return { ok: false, error: "selection is empty" };
  }
  try {
    const blob = await client.download(pids);
    basket.clear();
    return { ok: true, blob, fileName: "reborn-selection.zip" };
  } catch (err) {
    const message = err instanceof ApiError ? err.message : "download failed";
    return { ok: false, error: message };
  }
}
