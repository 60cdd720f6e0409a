/** View models: normalize API payloads into exactly what the templates show. */

import type {
  ComponentOut,
  DataItemOut,
  ProcedureOut,
  SearchHit,
  StatementDetail,
} from "./types.js";

export const NOT_PROVIDED = "not provided";

export interface SearchViewState {
  query: string;
  wSparse: number;
  hits: SearchHit[];
  error: string | null;
  pending: boolean;
}

export function initialSearchState(): SearchViewState {
  return { query: "", wSparse: 0.5, hits: [], error: null, pending: false };
}

/** Clamp a slider value to the [0, 1] range on 0.1 steps. */
export function snapWeight(value: number): number {
  const clamped = Math.min(1, Math.max(0, value));
  return Math.round(clamped * 10) / 10;
}

export interface Section<T> {
  title: string;
  items: T[];
}

export interface AnalysisSummaryVM {
  label: string;
  typeName: string;
  typePid: string;
  parts: string[];
}

export interface StatementViewModel {
  pid: string;
  label: string;
  articlePid: string;
  articleTitle: string;
  concepts: { id: string; label: string }[];
  analysis: Section<AnalysisSummaryVM>;
  procedure: Section<ProcedureOut>;
  components: Section<ComponentOut>;
  inputData: Section<DataItemOut>;
  outputData: Section<DataItemOut>;
  code: Section<{ fileName: string; language: string | null; size: number; url: string }>;
}

/**
 * Arrange a statement detail into the six sections the detail page shows.
 * A section with no items is rendered as the "not provided" placeholder.
 */
export function statementViewModel(detail: StatementDetail): StatementViewModel {
  return {
    pid: detail.pid,
    label: detail.label,
    articlePid: detail.article_pid,
    articleTitle: detail.article_title,
    concepts: detail.concepts.map((c) => ({ id: c.id, label: c.label })),
    analysis: {
      title: "Analysis",
      items: [
        {
          label: detail.analysis.label,
          typeName: detail.analysis.data_type.name,
          typePid: detail.analysis.data_type.pid,
          parts: detail.analysis.parts,
        },
      ],
    },
    procedure: { title: "Executed procedure", items: detail.procedure },
    components: { title: "Components", items: detail.components },
    inputData: { title: "Input data", items: detail.input_data },
    outputData: { title: "Output data", items: detail.output_data },
    code: {
      title: "Source code",
      items: detail.code.map((c) => ({
        fileName: c.file_name,
        language: c.language,
        size: c.size,
        url: c.url,
      })),
    },
  };
}

/** The six sections of a statement page, in display order. */
export function sectionOrder(vm: StatementViewModel): Section<unknown>[] {
  return [vm.analysis, vm.procedure, vm.components, vm.inputData, vm.outputData, vm.code];
}
