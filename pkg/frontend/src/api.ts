/** Thin typed client for the service HTTP API. */

import type { ArticleDetail, ArticleList, SearchResponse, StatementDetail } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ErrorEnvelope {
  code: string;
  message: string;
  details?: Record<string, unknown>;
}

/** An error response from the API, carrying the envelope the server sent. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, envelope: ErrorEnvelope) {
    super(envelope.message);
    this.name = "ApiError";
    this.status = status;
    this.code = envelope.code;
  }
}

async function parseEnvelope(response: Response): Promise<ErrorEnvelope> {
  try {
    const body = (await response.json()) as { error?: ErrorEnvelope };
    if (body.error && typeof body.error.code === "string") {
      return body.error;
    }
  } catch {
    // fall through to the generic envelope
  }
  return { code: "HTTP_" + String(response.status), message: response.statusText || "request failed" };
}

export function searchUrl(base: string, query: string, wSparse: number, k?: number): string {
  const params = new URLSearchParams({ q: query, w_sparse: wSparse.toFixed(1) });
  if (k !== undefined) {
    params.set("k", String(k));
  }
  return `${base}/api/search?${params.toString()}`;
}

export function downloadUrl(base: string, pids: string[]): string {
  const params = new URLSearchParams();
  for (const pid of pids) {
    params.append("ids", pid);
  }
  return `${base}/api/download?${params.toString()}`;
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;
  private searchAbort: AbortController | null = null;

  constructor(base = "", fetchImpl?: FetchLike) {
    this.base = base.replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async getJson<T>(url: string, signal?: AbortSignal): Promise<T> {
    const response = await this.fetchImpl(url, signal ? { signal } : undefined);
    if (!response.ok) {
      throw new ApiError(response.status, await parseEnvelope(response));
    }
    return (await response.json()) as T;
  }

  /**
   * Run a search; a newer call supersedes any still in flight, which is
   * aborted and rejects with an AbortError.
   */
  async search(query: string, wSparse: number, k?: number): Promise<SearchResponse> {
    this.searchAbort?.abort();
    const controller = new AbortController();
    this.searchAbort = controller;
    try {
      return await this.getJson<SearchResponse>(searchUrl(this.base, query, wSparse, k), controller.signal);
    } finally {
      if (this.searchAbort === controller) {
        this.searchAbort = null;
      }
    }
  }

  statement(pid: string): Promise<StatementDetail> {
    return this.getJson<StatementDetail>(`${this.base}/api/statements/${encodeURIComponent(pid)}`);
  }

  article(pid: string): Promise<ArticleDetail> {
    return this.getJson<ArticleDetail>(`${this.base}/api/articles/${encodeURIComponent(pid)}`);
  }

  articles(page = 1): Promise<ArticleList> {
    return this.getJson<ArticleList>(`${this.base}/api/articles?page=${page}`);
  }

  /** Fetch the export ZIP for the given statements as a Blob. */
  async download(pids: string[]): Promise<Blob> {
    const response = await this.fetchImpl(downloadUrl(this.base, pids));
    if (!response.ok) {
      throw new ApiError(response.status, await parseEnvelope(response));
    }
    return response.blob();
  }
}
