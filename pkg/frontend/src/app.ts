/** Browser entry point: hash routing, event wiring, and re-rendering. */

import { ApiClient, ApiError } from "./api.js";
import { Basket } from "./basket.js";
import { downloadSelection, runSearch } from "./flows.js";
import {
  renderArticleListPage,
  renderArticlePage,
  renderBasketBar,
  renderNotFound,
  renderSearchPage,
  renderStatementPage,
} from "./render.js";
import { initialSearchState, snapWeight, statementViewModel, type SearchViewState } from "./viewmodel.js";

const client = new ApiClient("");
const basket = new Basket(window.sessionStorage);

let searchState: SearchViewState = initialSearchState();
let downloadError: string | null = null;

const main = document.getElementById("main") as HTMLElement;
const basketBar = document.getElementById("basket-bar") as HTMLElement;

function route(): { page: string; pid: string } {
  const hash = window.location.hash.replace(/^#\/?/, "");
  const [page = "search", ...rest] = hash.split("/");
  return { page, pid: decodeURIComponent(rest.join("/")) };
}

function renderBasket(): void {
  basketBar.innerHTML = renderBasketBar(basket.list(), downloadError);
}

function renderSearch(): void {
  main.innerHTML = renderSearchPage(searchState, basket.list());
}

async function renderCurrent(): Promise<void> {
  const { page, pid } = route();
  renderBasket();
  if (page === "statements" && pid !== "") {
    try {
      const detail = await client.statement(pid);
      main.innerHTML = renderStatementPage(statementViewModel(detail), basket.has(pid));
    } catch (err) {
      main.innerHTML =
        err instanceof ApiError && err.status === 404
          ? renderNotFound(pid)
          : `<p class="error" role="alert">failed to load statement</p>`;
    }
    return;
  }
  if (page === "articles" && pid !== "") {
    try {
      main.innerHTML = renderArticlePage(await client.article(pid));
    } catch (err) {
      main.innerHTML =
        err instanceof ApiError && err.status === 404
          ? renderNotFound(pid)
          : `<p class="error" role="alert">failed to load article</p>`;
    }
    return;
  }
  if (page === "articles") {
    try {
      main.innerHTML = renderArticleListPage(await client.articles());
    } catch {
      main.innerHTML = `<p class="error" role="alert">failed to load articles</p>`;
    }
    return;
  }
  renderSearch();
}

async function submitSearch(query: string, wSparse: number): Promise<void> {
  searchState = { ...searchState, query, wSparse, pending: true, error: null };
  renderSearch();
  const next = await runSearch(client, searchState, query, wSparse);
  if (next === null) {
    return; // superseded by a newer search
  }
  searchState = next;
  if (route().page === "search") {
    renderSearch();
  }
}

function saveBlob(blob: Blob, fileName: string): void {
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = fileName;
  anchor.click();
  URL.revokeObjectURL(url);
}

document.addEventListener("submit", (event) => {
  const form = event.target as HTMLFormElement;
  if (form.dataset["action"] !== "search") {
    return;
  }
  event.preventDefault();
  const query = (form.elements.namedItem("q") as HTMLInputElement).value;
  const weight = snapWeight(Number((form.elements.namedItem("w_sparse") as HTMLInputElement).value));
  void submitSearch(query, weight);
});

document.addEventListener("input", (event) => {
  const input = event.target as HTMLInputElement;
  if (input.name === "w_sparse") {
    const output = input.closest("label")?.querySelector("output");
    if (output) {
      output.textContent = snapWeight(Number(input.value)).toFixed(1);
    }
  }
});

document.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (target === null) {
    return;
  }
  const action = target.dataset["action"];
  if (action === "toggle-basket") {
    const pid = target.dataset["pid"];
    if (pid !== undefined) {
      basket.toggle(pid);
      downloadError = null;
      void renderCurrent();
    }
  } else if (action === "download") {
    void (async () => {
      const result = await downloadSelection(client, basket);
      if (result.ok) {
        downloadError = null;
        saveBlob(result.blob, result.fileName);
      } else {
        downloadError = result.error;
      }
      void renderCurrent();
    })();
  }
});

window.addEventListener("hashchange", () => void renderCurrent());
void renderCurrent();
