/** Pure HTML renderers. Every function maps data to a markup string. */

import type { ArticleDetail, ArticleList, ComponentOut, DataItemOut, ProcedureOut, SearchHit } from "./types.js";
import { NOT_PROVIDED, type SearchViewState, type Section, type StatementViewModel } from "./viewmodel.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

const esc = escapeHtml;

export function formatScore(score: number): string {
  return score.toFixed(4);
}

function conceptChips(concepts: { id: string; label: string }[]): string {
  if (concepts.length === 0) {
    return "";
  }
  const chips = concepts
    .map((c) => `<span class="chip" title="${esc(c.id)}">${esc(c.label)}</span>`)
    .join("");
  return `<div class="chips">${chips}</div>`;
}

function basketButton(pid: string, inBasket: boolean): string {
  const label = inBasket ? "Remove from selection" : "Add to selection";
  return (
    `<button class="basket-toggle" data-action="toggle-basket" data-pid="${esc(pid)}" ` +
    `aria-pressed="${inBasket}">${label}</button>`
  );
}

export function renderHit(hit: SearchHit, inBasket: boolean): string {
  const paths = Object.entries(hit.path_scores)
    .map(([name, value]) => `${esc(name)} ${formatScore(value)}`)
    .join(" · ");
  return `<article class="hit" data-pid="${esc(hit.statement_pid)}">
  <h3><a href="#/statements/${encodeURIComponent(hit.statement_pid)}">${esc(hit.label)}</a></h3>
  <p class="hit-article"><a href="#/articles/${encodeURIComponent(hit.article_pid)}">${esc(hit.article_title)}</a></p>
  <p class="hit-score">score ${formatScore(hit.fused_score)} <span class="hit-path">(${esc(hit.path)}${paths ? ": " + paths : ""})</span></p>
  ${conceptChips(hit.concepts)}
  ${basketButton(hit.statement_pid, inBasket)}
</article>`;
}

export function renderSearchPage(state: SearchViewState, basket: string[]): string {
  const rows = state.hits.map((hit) => renderHit(hit, basket.includes(hit.statement_pid))).join("\n");
  const error = state.error === null ? "" : `<p class="error" role="alert">${esc(state.error)}</p>`;
  const status = state.pending
    ? `<p class="status">searching…</p>`
    : state.hits.length === 0 && state.query !== "" && state.error === null
      ? `<p class="status">no results</p>`
      : "";
  return `<form class="search-form" data-action="search">
  <input type="search" name="q" placeholder="search statements" value="${esc(state.query)}" aria-label="query">
  <label class="weight">sparse weight
    <input type="range" name="w_sparse" min="0" max="1" step="0.1" value="${state.wSparse}">
    <output>${state.wSparse.toFixed(1)}</output>
  </label>
  <button type="submit">Search</button>
</form>
${error}${status}
<div class="hits">
${rows}
</div>`;
}

function placeholder(): string {
  return `<p class="placeholder">${NOT_PROVIDED}</p>`;
}

function renderSection(section: Section<unknown>, body: string): string {
  const content = section.items.length === 0 ? placeholder() : body;
  return `<section class="stmt-section">
<h2>${esc(section.title)}</h2>
${content}
</section>`;
}

function renderProcedureStep(step: ProcedureOut): string {
  const params = step.parameters
    .map((p) => `<li><code>${esc(p.name)}</code> = <code>${esc(p.value)}</code></li>`)
    .join("");
  const call = [step.package, step.function].filter((x) => x !== null).join("::");
  return `<li class="procedure-step">
  <span class="part">part ${step.part}</span>
  ${step.language === null ? "" : `<span class="tag">${esc(step.language)}</span>`}
  ${call === "" ? "" : `<code>${esc(call)}</code>`}
  ${params === "" ? "" : `<ul class="params">${params}</ul>`}
</li>`;
}

function renderComponent(component: ComponentOut): string {
  const unit = component.unit === null ? "" : ` <span class="unit">[${esc(component.unit)}]</span>`;
  return `<tr><td>${esc(component.role)}</td><td><code>${esc(component.variable_name)}</code>${unit}</td></tr>`;
}

function renderSource(item: DataItemOut): string {
  if (item.source.kind === "url") {
    const url = item.source.url;
    return `<p class="data-source"><a href="${esc(url)}" rel="noopener">${esc(url)}</a></p>`;
  }
  const rows = item.source.rows
    .map((row) => `<tr>${row.map((cell) => `<td>${esc(cell)}</td>`).join("")}</tr>`)
    .join("");
  return `<table class="data-table"><tbody>${rows}</tbody></table>`;
}

function renderFigure(item: DataItemOut): string {
  if (item.figure === null) {
    return "";
  }
  const caption = item.figure.caption === null ? "" : `<p class="caption">${esc(item.figure.caption)}</p>`;
  return `<div class="figure-card">
  <span class="tag">figure</span> <code>${esc(item.figure.file_name)}</code>
  <span class="media-type">${esc(item.figure.media_type)}</span>
  ${caption}
</div>`;
}

export function renderDataItem(item: DataItemOut): string {
  const components = item.components
    .map((c) => `<li>${esc(c.role)}: <code>${esc(c.variable_name)}</code>${c.unit === null ? "" : ` [${esc(c.unit)}]`}</li>`)
    .join("");
  return `<div class="data-item">
  <h3>${esc(item.label)}</h3>
  <p class="dims">${item.matrix_rows} × ${item.matrix_cols}</p>
  ${renderSource(item)}
  ${components === "" ? "" : `<ul class="data-components">${components}</ul>`}
  ${renderFigure(item)}
</div>`;
}

export function renderStatementPage(vm: StatementViewModel, inBasket: boolean): string {
  const analysis = vm.analysis.items
    .map(
      (a) => `<dl class="analysis">
  <dt>label</dt><dd>${esc(a.label)}</dd>
  <dt>data type</dt><dd>${esc(a.typeName)} <code>${esc(a.typePid)}</code></dd>
  <dt>parts</dt><dd>${a.parts.map((p) => esc(p)).join(", ")}</dd>
</dl>`,
    )
    .join("");
  const procedure = `<ol class="procedure">${vm.procedure.items.map(renderProcedureStep).join("")}</ol>`;
  const components = `<table class="components"><thead><tr><th>role</th><th>variable</th></tr></thead><tbody>${vm.components.items
    .map(renderComponent)
    .join("")}</tbody></table>`;
  const inputData = vm.inputData.items.map(renderDataItem).join("");
  const outputData = vm.outputData.items.map(renderDataItem).join("");
  const code = `<ul class="code-files">${vm.code.items
    .map(
      (c) =>
        `<li><a href="${esc(c.url)}" download>${esc(c.fileName)}</a>` +
        `${c.language === null ? "" : ` <span class="tag">${esc(c.language)}</span>`}` +
        ` <span class="size">${c.size} bytes</span></li>`,
    )
    .join("")}</ul>`;
  return `<header class="stmt-header">
  <h1>${esc(vm.label)}</h1>
  <p class="stmt-pid"><code>${esc(vm.pid)}</code></p>
  <p class="stmt-article">from <a href="#/articles/${encodeURIComponent(vm.articlePid)}">${esc(vm.articleTitle)}</a></p>
  ${conceptChips(vm.concepts)}
  ${basketButton(vm.pid, inBasket)}
</header>
${renderSection(vm.analysis, analysis)}
${renderSection(vm.procedure, procedure)}
${renderSection(vm.components, components)}
${renderSection(vm.inputData, inputData)}
${renderSection(vm.outputData, outputData)}
${renderSection(vm.code, code)}`;
}

export function renderNotFound(pid: string): string {
  return `<div class="not-found">
<h1>Not found</h1>
<p>No statement or article with PID <code>${esc(pid)}</code> is deposited here.</p>
<p><a href="#/search">back to search</a></p>
</div>`;
}

export function renderArticlePage(article: ArticleDetail): string {
  const authors = article.authors.map((a) => esc(a.name)).join(", ");
  const statements = article.statements
    .map(
      (s) => `<li><a href="#/statements/${encodeURIComponent(s.pid)}">${esc(s.label)}</a>${conceptChips(
        s.concepts.map((c) => ({ id: c.id, label: c.label })),
      )}</li>`,
    )
    .join("");
  const venue = [article.journal, article.publisher].filter((x) => x !== null).map((x) => esc(x as string));
  return `<header class="article-header">
  <h1>${esc(article.title)}</h1>
  <p class="authors">${authors}</p>
  <p class="meta"><code>${esc(article.pid)}</code> · doi:${esc(article.original_doi)}${venue.length > 0 ? " · " + venue.join(" · ") : ""}</p>
</header>
<section><h2>Abstract</h2><p>${esc(article.abstract)}</p></section>
<section><h2>Statements</h2><ul class="statement-list">${statements}</ul></section>`;
}

export function renderArticleListPage(list: ArticleList): string {
  const rows = list.items
    .map(
      (a) => `<li><a href="#/articles/${encodeURIComponent(a.pid)}">${esc(a.title)}</a> <span class="count">${a.statement_count} statement(s)</span></li>`,
    )
    .join("");
  return `<h1>Articles</h1>
<ul class="article-list">${rows}</ul>
<p class="paging">page ${list.page} · ${list.total} article(s)</p>`;
}

export function renderBasketBar(pids: string[], error: string | null): string {
  const disabled = pids.length === 0 ? " disabled" : "";
  const note = error === null ? "" : `<span class="error" role="alert">${esc(error)}</span>`;
  return `<span class="basket-count">${pids.length} selected</span>
<button data-action="download" ${disabled.trim()}>Download selection</button>
${note}`;
}
