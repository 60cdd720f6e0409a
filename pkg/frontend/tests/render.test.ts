import { describe, expect, it } from "vitest";

import {
  escapeHtml,
  renderBasketBar,
  renderHit,
  renderNotFound,
  renderSearchPage,
  renderStatementPage,
} from "../src/render.js";
import type { SearchHit, SearchResponse, StatementDetail } from "../src/types.js";
import { initialSearchState, statementViewModel } from "../src/viewmodel.js";

import searchFixture from "./fixtures/search.json";
import s1 from "./fixtures/statement_s1.json";
import s2 from "./fixtures/statement_s2.json";

const search = searchFixture as SearchResponse;
const detailS1 = s1 as StatementDetail;
const detailS2 = s2 as StatementDetail;

function count(haystack: string, needle: string): number {
  return haystack.split(needle).length - 1;
}

describe("escapeHtml", () => {
  it("neutralizes markup metacharacters", () => {
    expect(escapeHtml(`<img src=x onerror="pwn('hi')">`)).toBe(
      "&lt;img src=x onerror=&quot;pwn(&#39;hi&#39;)&quot;&gt;",
    );
  });
});

describe("renderStatementPage", () => {
  const html = renderStatementPage(statementViewModel(detailS1), false);

  it("renders exactly six labeled sections in order", () => {
    expect(count(html, '<section class="stmt-section">')).toBe(6);
    const titles = [...html.matchAll(/<h2>([^<]+)<\/h2>/g)].map((m) => m[1]);
    expect(titles).toEqual([
      "Analysis",
      "Executed procedure",
      "Components",
      "Input data",
      "Output data",
      "Source code",
    ]);
  });

  it("shows the analysis summary with its data type", () => {
    expect(html).toContain("Linear mixed-effects model of microbial biomass carbon");
    expect(html).toContain("Multilevel Analysis");
    expect(html).toContain("21.T11969/c6b413ba96ba477b5dca");
  });

  it("shows the procedure call with its parameters", () => {
    expect(html).toContain("lme4::lmer");
    expect(html).toContain("mbc ~ treatment + (1 | block)");
    expect(html).toContain('<span class="tag">r</span>');
  });

  it("renders table sources as tables with the response rows", () => {
    expect(html).toContain("<td>fallow</td><td>1</td><td>0-10</td><td>412</td>");
    expect(html).toContain("<td>treatment mix12</td><td>118.6</td><td>16.9</td><td>0.001</td>");
  });

  it("renders figures as metadata cards", () => {
    expect(html).toContain("mbc-treatment-effects.png");
    expect(html).toContain("image/png");
    expect(html).toContain("Microbial biomass carbon by cover crop treatment and soil depth.");
  });

  it("links code files with a language tag and size", () => {
    expect(html).toContain('href="/api/statements/10.48366%2F5eqe8313.s1/code/model.R"');
    expect(html).toContain("model.R");
    expect(html).toContain("132 bytes");
  });

  it("marks empty sections as not provided", () => {
    const htmlS2 = renderStatementPage(statementViewModel(detailS2), false);
    const codeSection = htmlS2.slice(htmlS2.indexOf("<h2>Source code</h2>"));
    expect(codeSection).toContain("not provided");
    expect(count(htmlS2, "not provided")).toBe(1);
    expect(count(html, "not provided")).toBe(0);
  });

  it("renders url sources as links", () => {
    const htmlS2 = renderStatementPage(statementViewModel(detailS2), false);
    expect(htmlS2).toContain('<a href="https://doi.org/10.25835/weuhha72"');
  });

  it("reflects basket membership on the toggle button", () => {
    expect(html).toContain('aria-pressed="false">Add to selection</button>');
    const inBasket = renderStatementPage(statementViewModel(detailS1), true);
    expect(inBasket).toContain('aria-pressed="true">Remove from selection</button>');
  });
});

describe("renderSearchPage", () => {
  it("renders hits in response order with label, article and score", () => {
    const state = { ...initialSearchState(), query: search.query, hits: search.hits };
    const html = renderSearchPage(state, []);
    const positions = search.hits.map((h) => html.indexOf(`data-pid="${h.statement_pid}"`));
    expect(positions.every((p) => p >= 0)).toBe(true);
    expect([...positions].sort((a, b) => a - b)).toEqual(positions);
    expect(html).toContain("Cover crops increase microbial biomass carbon in topsoil");
    expect(html).toContain("Cover crops shape the soil microbial community");
    expect(html).toContain("score 1.0000");
    expect(html).toContain("score 0.5000");
    expect(html).toContain('<span class="chip"');
    expect(html).toContain("soil microbial biomass");
  });

  it("shows path scores next to the winning path", () => {
    const state = { ...initialSearchState(), query: search.query, hits: search.hits };
    const html = renderSearchPage(state, []);
    expect(html).toContain("(sparse: sparse 4.6717 · dense 0.6223)");
  });

  it("shows inline errors and keeps the query in the box", () => {
    const state = { ...initialSearchState(), query: "lme4", error: "search request failed" };
    const html = renderSearchPage(state, []);
    expect(html).toContain('<p class="error" role="alert">search request failed</p>');
    expect(html).toContain('value="lme4"');
  });

  it("distinguishes empty results from the initial page", () => {
    const empty = renderSearchPage({ ...initialSearchState(), query: "zzz" }, []);
    expect(empty).toContain("no results");
    const initial = renderSearchPage(initialSearchState(), []);
    expect(initial).not.toContain("no results");
  });

  it("escapes hostile fields from the API", () => {
    const hostile: SearchHit = {
      ...search.hits[0]!,
      label: `<script>alert("x")</script>`,
      article_title: `<b onmouseover='y'>t</b>`,
    };
    const html = renderHit(hostile, false);
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
    expect(html).not.toContain("<b onmouseover");
  });

  it("marks basket members as selected", () => {
    const state = { ...initialSearchState(), query: search.query, hits: search.hits };
    const html = renderSearchPage(state, ["10.48366/5eqe8313.s2"]);
    const s1Block = html.slice(html.indexOf('data-pid="10.48366/5eqe8313.s1"'), html.indexOf('data-pid="10.48366/5eqe8313.s2"'));
    const s2Block = html.slice(html.indexOf('data-pid="10.48366/5eqe8313.s2"'));
    expect(s1Block).toContain('aria-pressed="false"');
    expect(s2Block).toContain('aria-pressed="true"');
  });

  it("reflects the slider position", () => {
    const state = { ...initialSearchState(), wSparse: 1 };
    const html = renderSearchPage(state, []);
    expect(html).toContain('value="1"');
    expect(html).toContain("<output>1.0</output>");
  });
});

describe("renderNotFound", () => {
  it("names the missing pid", () => {
    const html = renderNotFound("10.48366/zzz.s9");
    expect(html).toContain("Not found");
    expect(html).toContain("10.48366/zzz.s9");
  });
});

describe("renderBasketBar", () => {
  it("disables the download button when nothing is selected", () => {
    const html = renderBasketBar([], null);
    expect(html).toContain("0 selected");
    expect(html).toContain("disabled");
  });

  it("enables the button and shows the count otherwise", () => {
    const html = renderBasketBar(["10.48366/a.s1", "10.48366/a.s2"], null);
    expect(html).toContain("2 selected");
    expect(html).not.toContain("disabled");
  });

  it("surfaces download errors", () => {
    const html = renderBasketBar(["10.48366/a.s1"], "no statement 10.48366/a.s1");
    expect(html).toContain('role="alert"');
    expect(html).toContain("no statement 10.48366/a.s1");
  });
});
