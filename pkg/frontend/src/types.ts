/** Response shapes of the service HTTP API, mirrored field-for-field. */

export interface Concept {
  id: string;
  label: string;
  description: string | null;
}

export interface SearchHit {
  statement_pid: string;
  article_pid: string;
  article_title: string;
  label: string;
  fused_score: number;
  path: string;
  path_scores: Record<string, number>;
  concepts: Concept[];
}

export interface SearchResponse {
  query: string;
  k: number;
  w_sparse: number;
  hits: SearchHit[];
}

export interface ProcedureOut {
  part: number;
  language: string | null;
  package: string | null;
  function: string | null;
  parameters: { name: string; value: string }[];
}

export interface ComponentOut {
  role: string;
  variable_name: string;
  unit: string | null;
  part?: number;
}

export interface TableSourceOut {
  kind: "table";
  rows: string[][];
}

export interface UrlSourceOut {
  kind: "url";
  url: string;
}

export interface FigureOut {
  file_name: string;
  media_type: string;
  caption: string | null;
}

export interface DataItemOut {
  part: number;
  index: number;
  label: string;
  matrix_rows: number;
  matrix_cols: number;
  source: TableSourceOut | UrlSourceOut;
  components: ComponentOut[];
  figure: FigureOut | null;
}

export interface CodeFileOut {
  file_name: string;
  language: string | null;
  size: number;
  url: string;
}

export interface AnalysisOut {
  label: string;
  data_type: { pid: string; name: string };
  parts: string[];
}

export interface StatementDetail {
  pid: string;
  label: string;
  article_pid: string;
  article_title: string;
  concepts: Concept[];
  analysis: AnalysisOut;
  procedure: ProcedureOut[];
  components: ComponentOut[];
  input_data: DataItemOut[];
  output_data: DataItemOut[];
  code: CodeFileOut[];
}

export interface AuthorOut {
  name: string;
  identifier: string | null;
}

export interface StatementSummary {
  pid: string;
  label: string;
  concepts: Concept[];
}

export interface ArticleSummary {
  pid: string;
  title: string;
  original_doi: string;
  journal: string | null;
  publisher: string | null;
  ingested_at: number;
  statement_count: number;
}

export interface ArticleList {
  items: ArticleSummary[];
  page: number;
  page_size: number;
  total: number;
}

export interface ArticleDetail {
  pid: string;
  title: string;
  abstract: string;
  original_doi: string;
  authors: AuthorOut[];
  journal: string | null;
  publisher: string | null;
  ingested_at: number;
  statements: StatementSummary[];
}
