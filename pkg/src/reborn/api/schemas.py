"""Request/response models for the HTTP API.

Response shapes mirror the article page and the six evidence sections of a
statement page (analysis, procedure, components, input data, output data,
code).  Mapping from domain objects lives here so the route handlers stay
one-liners.
"""
from __future__ import annotations

from typing import Any

from pydantic import BaseModel

from ..catalog import CatalogRecord
from ..dtr import DataTypeDefinition
from ..engine import KnowledgeService, SearchResult
from ..model import (
    Component,
    Concept,
    DataItem,
    RebornArticle,
    Statement,
    TableSource,
    ValidationReport,
)


class ConceptOut(BaseModel):
    id: str
    label: str
    description: str | None = None

    @classmethod
    def from_domain(cls, concept: Concept) -> "ConceptOut":
        return cls(id=concept.id, label=concept.label, description=concept.description)


class IngestResponse(BaseModel):
    article_pid: str
    statements_indexed: int


class SearchHit(BaseModel):
    statement_pid: str
    article_pid: str
    article_title: str
    label: str
    fused_score: float
    path: str
    path_scores: dict[str, float]
    concepts: list[ConceptOut]

    @classmethod
    def from_domain(cls, result: SearchResult) -> "SearchHit":
        return cls(
            statement_pid=result.statement.pid.value,
            article_pid=result.article.pid.value,
            article_title=result.article.title,
            label=result.statement.label,
            fused_score=result.hit.fused_score or 0.0,
            path=result.hit.path,
            path_scores=result.path_scores,
            concepts=[ConceptOut.from_domain(c) for c in result.statement.concepts],
        )


class SearchResponse(BaseModel):
    query: str
    k: int
    w_sparse: float
    hits: list[SearchHit]


class AuthorOut(BaseModel):
    name: str
    identifier: str | None = None


class StatementSummary(BaseModel):
    pid: str
    label: str
    concepts: list[ConceptOut]

    @classmethod
    def from_domain(cls, statement: Statement) -> "StatementSummary":
        return cls(
            pid=statement.pid.value,
            label=statement.label,
            concepts=[ConceptOut.from_domain(c) for c in statement.concepts],
        )


class ArticleSummary(BaseModel):
    pid: str
    title: str
    original_doi: str
    journal: str | None
    publisher: str | None
    ingested_at: int
    statement_count: int

    @classmethod
    def from_domain(cls, record: CatalogRecord) -> "ArticleSummary":
        article = record.article
        return cls(
            pid=article.pid.value,
            title=article.title,
            original_doi=article.original_doi.value,
            journal=article.journal,
            publisher=article.publisher,
            ingested_at=record.ingested_at,
            statement_count=len(article.statements),
        )


class ArticleList(BaseModel):
    items: list[ArticleSummary]
    page: int
    page_size: int
    total: int


class ArticleDetail(BaseModel):
    pid: str
    title: str
    abstract: str
    original_doi: str
    authors: list[AuthorOut]
    journal: str | None
    publisher: str | None
    ingested_at: int
    statements: list[StatementSummary]

    @classmethod
    def from_domain(cls, record: CatalogRecord) -> "ArticleDetail":
        article = record.article
        return cls(
            pid=article.pid.value,
            title=article.title,
            abstract=article.abstract_text,
            original_doi=article.original_doi.value,
            authors=[
                AuthorOut(
                    name=a.name,
                    identifier=a.identifier.value if a.identifier else None,
                )
                for a in article.authors
            ],
            journal=article.journal,
            publisher=article.publisher,
            ingested_at=record.ingested_at,
            statements=[StatementSummary.from_domain(s) for s in article.statements],
        )


class DataTypeRef(BaseModel):
    pid: str
    name: str | None = None


class AnalysisSection(BaseModel):
    label: str
    data_type: DataTypeRef
    parts: list[str]


class ProcedureOut(BaseModel):
    part: int
    language: str
    package: str
    function: str
    parameters: list[dict[str, str]]


class VariableOut(BaseModel):
    role: str
    variable_name: str
    unit: str | None = None

    @classmethod
    def from_domain(cls, component: Component) -> "VariableOut":
        return cls(
            role=component.role,
            variable_name=component.variable_name,
            unit=component.unit,
        )


class ComponentOut(VariableOut):
    part: int


class FigureOut(BaseModel):
    file_name: str
    media_type: str
    caption: str | None = None


class DataItemOut(BaseModel):
    part: int
    index: int
    label: str
    matrix_rows: int
    matrix_cols: int
    source: dict[str, Any]
    components: list[VariableOut]
    figure: FigureOut | None = None

    @classmethod
    def from_domain(cls, item: DataItem, part: int, index: int) -> "DataItemOut":
        if isinstance(item.source, TableSource):
            source: dict[str, Any] = {
                "kind": "table",
                "rows": [list(row) for row in item.source.rows],
            }
        else:
            source = {"kind": "url", "url": item.source.url}
        figure = None
        if item.figure is not None:
            figure = FigureOut(
                file_name=item.figure.file_name,
                media_type=item.figure.media_type,
                caption=item.figure.caption,
            )
        return cls(
            part=part,
            index=index,
            label=item.label,
            matrix_rows=item.matrix_rows,
            matrix_cols=item.matrix_cols,
            source=source,
            components=[VariableOut.from_domain(c) for c in item.components],
            figure=figure,
        )


class CodeFileOut(BaseModel):
    file_name: str
    language: str
    size: int
    url: str


class StatementDetail(BaseModel):
    pid: str
    label: str
    article_pid: str
    article_title: str
    concepts: list[ConceptOut]
    analysis: AnalysisSection
    procedure: list[ProcedureOut]
    components: list[ComponentOut]
    input_data: list[DataItemOut]
    output_data: list[DataItemOut]
    code: list[CodeFileOut]

    @classmethod
    def from_domain(
        cls,
        statement: Statement,
        article: RebornArticle,
        service: KnowledgeService,
    ) -> "StatementDetail":
        evidence = statement.evidence
        procedures: list[ProcedureOut] = []
        components: list[ComponentOut] = []
        inputs: list[DataItemOut] = []
        outputs: list[DataItemOut] = []
        for part_no, part in enumerate(evidence.parts, start=1):
            if part.procedure is not None:
                procedures.append(
                    ProcedureOut(
                        part=part_no,
                        language=part.procedure.language,
                        package=part.procedure.package,
                        function=part.procedure.function_name,
                        parameters=[
                            {"name": name, "value": value}
                            for name, value in part.procedure.parameters
                        ],
                    )
                )
            components.extend(
                ComponentOut(
                    part=part_no,
                    role=c.role,
                    variable_name=c.variable_name,
                    unit=c.unit,
                )
                for c in part.components
            )
            inputs.extend(
                DataItemOut.from_domain(item, part_no, i)
                for i, item in enumerate(part.inputs, start=1)
            )
            outputs.extend(
                DataItemOut.from_domain(item, part_no, i)
                for i, item in enumerate(part.outputs, start=1)
            )
        encoded_pid = statement.pid.value.replace("/", "%2F")
        return cls(
            pid=statement.pid.value,
            label=statement.label,
            article_pid=article.pid.value,
            article_title=article.title,
            concepts=[ConceptOut.from_domain(c) for c in statement.concepts],
            analysis=AnalysisSection(
                label=evidence.analysis_label,
                data_type=DataTypeRef(
                    pid=evidence.data_type_pid.value,
                    name=service.type_name(evidence.data_type_pid),
                ),
                parts=[p.label for p in evidence.parts],
            ),
            procedure=procedures,
            components=components,
            input_data=inputs,
            output_data=outputs,
            code=[
                CodeFileOut(
                    file_name=f.file_name,
                    language=f.language,
                    size=len(f.content),
                    url=f"/api/statements/{encoded_pid}/code/{f.file_name}",
                )
                for f in evidence.source_code
            ],
        )


class SchemaPropertyOut(BaseModel):
    name: str
    kind: str
    required: bool
    multiplicity: str


class DataTypeOut(BaseModel):
    pid: str
    name: str
    definition: str
    schema_properties: list[SchemaPropertyOut]

    @classmethod
    def from_domain(cls, definition: DataTypeDefinition) -> "DataTypeOut":
        return cls(
            pid=definition.pid.value,
            name=definition.name,
            definition=definition.definition,
            schema_properties=[
                SchemaPropertyOut(
                    name=p.name,
                    kind=p.kind,
                    required=p.required,
                    multiplicity=p.multiplicity,
                )
                for p in definition.schema
            ],
        )


class ViolationOut(BaseModel):
    code: str
    where: str
    message: str


class ValidationResponse(BaseModel):
    ok: bool
    violations: list[ViolationOut]

    @classmethod
    def from_domain(cls, report: ValidationReport) -> "ValidationResponse":
        return cls(
            ok=report.ok,
            violations=[
                ViolationOut(code=v.code, where=v.where, message=v.message)
                for v in report.violations
            ],
        )


class ReindexResponse(BaseModel):
    articles: int
    statements_sparse: int
    statements_dense: int


class HealthResponse(BaseModel):
    status: str
    articles: int
    statements: int
    encoder: str
