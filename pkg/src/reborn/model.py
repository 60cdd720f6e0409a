"""Knowledge model for reborn articles.

A reborn article is a machine-readable redescription of a published paper:
bibliographic metadata plus a list of scientific *statements*, each backed by
evidence (a typed analysis with executed procedures, data matrices, variables
and source code).  All types are immutable; validation never mutates and
reports problems as data rather than exceptions.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Protocol, Union

__all__ = [
    "Pid",
    "PersonRef",
    "Concept",
    "ExecutedProcedure",
    "Component",
    "FigureRef",
    "TableSource",
    "UrlSource",
    "DataSource",
    "DataItem",
    "CodeFile",
    "AnalysisPart",
    "Evidence",
    "Statement",
    "RebornArticle",
    "Violation",
    "ValidationReport",
    "validate_article",
    "statement_fulltext",
    "LANGUAGE_PYTHON",
    "LANGUAGE_R",
    "ROLE_TARGET_VARIABLE",
    "ROLE_INDEPENDENT_VARIABLE",
    "ROLE_GROUPING_VARIABLE",
]

LANGUAGE_PYTHON = "python"
LANGUAGE_R = "r"

ROLE_TARGET_VARIABLE = "target_variable"
ROLE_INDEPENDENT_VARIABLE = "independent_variable"
ROLE_GROUPING_VARIABLE = "grouping_variable"

_SUFFIX_RE = re.compile(r"^[a-z0-9._-]+$")


@dataclass(frozen=True)
class Pid:
    """Persistent identifier of the form ``prefix/suffix``.

    The suffix is canonicalized to lowercase at construction; the allowed
    suffix alphabet after lowercasing is ``[a-z0-9._-]``.
    """

    value: str

    def __post_init__(self) -> None:
        prefix, sep, suffix = self.value.partition("/")
        if not sep or not prefix or not suffix:
            raise ValueError(f"pid must look like prefix/suffix, got {self.value!r}")
        suffix = suffix.lower()
        if not _SUFFIX_RE.match(suffix):
            raise ValueError(f"pid suffix has characters outside [a-z0-9._-]: {self.value!r}")
        object.__setattr__(self, "value", f"{prefix}/{suffix}")

    @property
    def prefix(self) -> str:
        return self.value.partition("/")[0]

    @property
    def suffix(self) -> str:
        return self.value.partition("/")[2]

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class PersonRef:
    name: str
    identifier: Pid | None = None


@dataclass(frozen=True)
class Concept:
    """A subject-vocabulary concept a statement is about."""

    id: str
    label: str
    description: str | None = None


@dataclass(frozen=True)
class ExecutedProcedure:
    """One library call that was executed as part of an analysis."""

    language: str
    package: str
    function_name: str
    parameters: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "parameters", tuple(tuple(p) for p in self.parameters))


@dataclass(frozen=True)
class Component:
    """A named variable playing a role in an analysis (or in a data matrix)."""

    role: str
    variable_name: str
    unit: str | None = None


@dataclass(frozen=True)
class FigureRef:
    file_name: str
    media_type: str
    caption: str | None = None


@dataclass(frozen=True)
class TableSource:
    """Inline tabular data: a tuple of rows, each a tuple of cell strings."""

    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(tuple(str(c) for c in row) for row in self.rows))


@dataclass(frozen=True)
class UrlSource:
    url: str


DataSource = Union[TableSource, UrlSource]


@dataclass(frozen=True)
class DataItem:
    """A data matrix consumed or produced by an analysis part."""

    label: str
    source: DataSource
    matrix_rows: int
    matrix_cols: int
    components: tuple[Component, ...] = ()
    figure: FigureRef | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(self.components))


@dataclass(frozen=True)
class CodeFile:
    file_name: str
    language: str
    content: bytes = b""


@dataclass(frozen=True)
class AnalysisPart:
    label: str
    procedure: ExecutedProcedure | None = None
    inputs: tuple[DataItem, ...] = ()
    outputs: tuple[DataItem, ...] = ()
    components: tuple[Component, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "components", tuple(self.components))


@dataclass(frozen=True)
class Evidence:
    """The typed analysis backing a statement."""

    analysis_label: str
    data_type_pid: Pid
    parts: tuple[AnalysisPart, ...] = ()
    source_code: tuple[CodeFile, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "parts", tuple(self.parts))
        object.__setattr__(self, "source_code", tuple(self.source_code))


@dataclass(frozen=True)
class Statement:
    """A single scientific finding with machine-readable evidence."""

    pid: Pid
    label: str
    evidence: Evidence
    article_pid: Pid
    concepts: tuple[Concept, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "concepts", tuple(self.concepts))


@dataclass(frozen=True)
class RebornArticle:
    pid: Pid
    original_doi: Pid
    title: str
    abstract_text: str
    authors: tuple[PersonRef, ...] = ()
    journal: str | None = None
    publisher: str | None = None
    statements: tuple[Statement, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "authors", tuple(self.authors))
        object.__setattr__(self, "statements", tuple(self.statements))

    def statement(self, pid: Pid) -> Statement | None:
        for stmt in self.statements:
            if stmt.pid == pid:
                return stmt
        return None

    def with_statements(self, statements: Iterable[Statement]) -> "RebornArticle":
        return replace(self, statements=tuple(statements))


@dataclass(frozen=True)
class Violation:
    code: str
    where: str
    message: str

    def to_dict(self) -> dict[str, str]:
        return {"code": self.code, "where": self.where, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "violations", tuple(self.violations))

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


class TypeRegistry(Protocol):
    """What validation needs from a data-type registry (see :mod:`reborn.dtr`)."""

    def contains(self, pid: Pid) -> bool: ...

    def validate_instance(self, evidence: Evidence, pid: Pid) -> ValidationReport: ...


def validate_article(article: RebornArticle, registry: TypeRegistry) -> ValidationReport:
    """Check structural invariants of ``article`` against ``registry``.

    Returns a report listing every violation found; an empty report means the
    article is acceptable for cataloguing.  Checks are ordered header first,
    then statements in order, walking each statement's evidence depth-first.
    """
    violations: list[Violation] = []

    def flag(code: str, where: str, message: str) -> None:
        violations.append(Violation(code, where, message))

    if not article.title.strip():
        flag("EMPTY_TITLE", "article", "article title is empty")
    if article.pid == article.original_doi:
        flag("PID_CONFLICT", "article", "reborn pid must differ from the original DOI")
    if not article.statements:
        flag("EMPTY_STATEMENTS", "article", "article carries no statements")
    for i, author in enumerate(article.authors):
        if not author.name.strip():
            flag("EMPTY_NAME", f"authors[{i}]", "author name is empty")

    seen_stmt_pids: set[str] = set()
    for i, stmt in enumerate(article.statements):
        where = f"statements[{i}]"
        if not stmt.label.strip():
            flag("EMPTY_LABEL", where, "statement label is empty")
        if stmt.article_pid != article.pid:
            flag(
                "WRONG_ARTICLE",
                where,
                f"statement points at article {stmt.article_pid} but belongs to {article.pid}",
            )
        if stmt.pid.value in seen_stmt_pids:
            flag("DUPLICATE_PID", where, f"statement pid {stmt.pid} repeats")
        seen_stmt_pids.add(stmt.pid.value)
        for j, concept in enumerate(stmt.concepts):
            if not concept.label.strip():
                flag("EMPTY_LABEL", f"{where}.concepts[{j}]", "concept label is empty")

        evidence = stmt.evidence
        ewhere = f"{where}.evidence"
        if not evidence.parts:
            flag("EMPTY_PARTS", ewhere, "evidence has no analysis parts")
        if not registry.contains(evidence.data_type_pid):
            flag(
                "UNKNOWN_DATA_TYPE",
                ewhere,
                f"data type {evidence.data_type_pid} is not registered",
            )
        else:
            # Schema conformance (required procedure, data items, components)
            # is the registry's job; re-checking it here would double-report.
            report = registry.validate_instance(evidence, evidence.data_type_pid)
            violations.extend(
                Violation(v.code, f"{ewhere}.{v.where}" if v.where else ewhere, v.message)
                for v in report.violations
            )

        seen_files: set[str] = set()
        for j, code_file in enumerate(evidence.source_code):
            if code_file.file_name in seen_files:
                flag(
                    "DUPLICATE_FILE",
                    f"{ewhere}.source_code[{j}]",
                    f"code file name {code_file.file_name!r} repeats within the evidence",
                )
            seen_files.add(code_file.file_name)

        for j, part in enumerate(evidence.parts):
            pwhere = f"{ewhere}.parts[{j}]"
            if not part.inputs and not part.outputs:
                flag("EMPTY_DATA", pwhere, "analysis part has neither inputs nor outputs")
            if part.procedure is not None:
                if not part.procedure.package.strip() or not part.procedure.function_name.strip():
                    flag(
                        "EMPTY_PROCEDURE",
                        f"{pwhere}.procedure",
                        "procedure package and function name must be non-empty",
                    )
            for comp in part.components:
                if not comp.variable_name.strip():
                    flag("EMPTY_VARIABLE", pwhere, "component variable name is empty")
            for kind, items in (("inputs", part.inputs), ("outputs", part.outputs)):
                for k, item in enumerate(items):
                    iwhere = f"{pwhere}.{kind}[{k}]"
                    _check_item(item, iwhere, flag)

    return ValidationReport(tuple(violations))


def _check_item(item: DataItem, where: str, flag: Callable[[str, str, str], None]) -> None:
    if item.matrix_rows < 0 or item.matrix_cols < 0:
        flag("MATRIX_SHAPE", where, "matrix dimensions must be >= 0")
        return
    if isinstance(item.source, TableSource):
        rows = item.source.rows
        if item.matrix_rows != len(rows):
            flag(
                "MATRIX_SHAPE",
                where,
                f"declared {item.matrix_rows} rows, table has {len(rows)}",
            )
        widths = {len(r) for r in rows}
        if rows and (len(widths) != 1 or item.matrix_cols not in widths):
            flag(
                "MATRIX_SHAPE",
                where,
                f"declared {item.matrix_cols} cols, table widths are {sorted(widths)}",
            )
    if item.figure is not None and not item.figure.file_name.strip():
        flag("EMPTY_FILE_NAME", where, "figure file name is empty")


def statement_fulltext(
    statement: Statement,
    article: RebornArticle,
    resolve_type_name: Callable[[Pid], str | None] | None = None,
) -> str:
    """Flatten a statement into the text indexed by the sparse path.

    Concatenation order is fixed: statement label; concept labels; analysis
    label and resolved data-type name; each part's procedure package and
    function; each part's component variable names; finally the article
    title.  Pieces are joined with single spaces and empty pieces dropped,
    so the projection is deterministic for a given statement.
    """
    pieces: list[str] = [statement.label]
    pieces.extend(c.label for c in statement.concepts)
    pieces.append(statement.evidence.analysis_label)
    if resolve_type_name is not None:
        name = resolve_type_name(statement.evidence.data_type_pid)
        if name:
            pieces.append(name)
    for part in statement.evidence.parts:
        if part.procedure is not None:
            pieces.append(part.procedure.package)
            pieces.append(part.procedure.function_name)
    for part in statement.evidence.parts:
        pieces.extend(comp.variable_name for comp in part.components)
    pieces.append(article.title)
    return " ".join(p for p in pieces if p)
