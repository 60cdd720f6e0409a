"""RO-Crate JSON-LD parsing, serialization, and harvesting.

A crate is a JSON object with an ``@context`` referencing the RO-Crate
vocabulary and an ``@graph`` of typed entities; the root dataset entity has
id ``"./"``.  This module maps graph entities to and from the knowledge
model using a fixed profile:

* the root ``Dataset`` carries ``identifier`` (reborn pid),
  ``originalPublication``, ``name``, ``description``, ``author``,
  ``publisher`` and ``journal``;
* each ``Statement`` entity carries ``identifier``, ``label``, ``about``
  (concept references) and ``evidence`` (reference to an analysis
  ``Component``);
* analyses decompose into part components; executed procedures are
  components with ``package``, ``function`` and ``language``; data items are
  components with ``matrixRows``, ``matrixCols`` and ``source``; code is a
  ``File`` with ``programmingLanguage`` and base64 content.

Unknown entity types and properties are preserved verbatim in the parsed
document (they simply do not contribute to the article).
"""
from __future__ import annotations

import base64
import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Protocol
from urllib.parse import quote

from .errors import (
    MalformedJson,
    MissingGraph,
    MissingRoot,
    NotDeposited,
    ProfileViolation,
    SourceUnreachable,
)
from .model import (
    AnalysisPart,
    CodeFile,
    Component,
    Concept,
    DataItem,
    Evidence,
    ExecutedProcedure,
    FigureRef,
    PersonRef,
    Pid,
    RebornArticle,
    Statement,
    TableSource,
    UrlSource,
)

ROCRATE_CONTEXT = "https://w3id.org/ro/crate/1.1/context"
METADATA_FILE_NAME = "ro-crate-metadata.json"
ROOT_ID = "./"


@dataclass(frozen=True)
class EntityNode:
    id: str
    types: tuple[str, ...]
    properties: dict[str, Any]

    def __post_init__(self) -> None:
        object.__setattr__(self, "types", tuple(self.types))

    def has_type(self, name: str) -> bool:
        return name in self.types


@dataclass(frozen=True)
class RoCrateDocument:
    context: str | tuple[str, ...]
    graph: tuple[EntityNode, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "graph", tuple(self.graph))

    def entity(self, entity_id: str) -> EntityNode:
        for node in self.graph:
            if node.id == entity_id:
                return node
        raise ProfileViolation(
            f"reference to missing entity {entity_id!r}", entity_id=entity_id
        )

    def by_type(self, type_name: str) -> list[EntityNode]:
        return [node for node in self.graph if node.has_type(type_name)]

    @property
    def root(self) -> EntityNode:
        return self.entity(ROOT_ID)


# -- parse / serialize ------------------------------------------------------


def parse_rocrate(data: bytes | str) -> RoCrateDocument:
    """Parse crate bytes into a document; never mutates the input."""
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedJson(f"crate is not UTF-8: {exc}") from exc
    else:
        text = data
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"crate is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise MalformedJson("crate top level must be a JSON object")

    context = payload.get("@context")
    if not _context_ok(context):
        raise MalformedJson("@context does not reference the RO-Crate context")
    if "@graph" not in payload:
        raise MissingGraph("crate has no @graph")
    graph = payload["@graph"]
    if not isinstance(graph, list):
        raise MissingGraph("@graph must be a list of entities")

    entities: list[EntityNode] = []
    seen_ids: set[str] = set()
    for raw in graph:
        if not isinstance(raw, dict):
            raise ProfileViolation("graph entries must be JSON objects")
        entity_id = raw.get("@id")
        if not isinstance(entity_id, str) or not entity_id:
            raise ProfileViolation("entity lacks a non-empty @id")
        if entity_id in seen_ids:
            raise ProfileViolation(
                f"duplicate entity id {entity_id!r}", entity_id=entity_id
            )
        seen_ids.add(entity_id)
        raw_types = raw.get("@type")
        if isinstance(raw_types, str):
            types: tuple[str, ...] = (raw_types,)
        elif isinstance(raw_types, list) and raw_types:
            types = tuple(str(t) for t in raw_types)
        else:
            raise ProfileViolation(
                f"entity {entity_id!r} lacks @type", entity_id=entity_id
            )
        properties = {k: v for k, v in raw.items() if k not in ("@id", "@type")}
        entities.append(EntityNode(entity_id, types, properties))

    roots = [e for e in entities if e.id == ROOT_ID and e.has_type("Dataset")]
    if len(roots) != 1:
        raise MissingRoot('crate must contain exactly one Dataset entity with id "./"')

    if isinstance(context, list):
        context_value: str | tuple[str, ...] = tuple(str(c) for c in context)
    else:
        context_value = str(context)
    return RoCrateDocument(context=context_value, graph=tuple(entities))


def _context_ok(context: Any) -> bool:
    if isinstance(context, str):
        return "ro/crate" in context
    if isinstance(context, list):
        return any(isinstance(c, str) and "ro/crate" in c for c in context)
    return False


def serialize_document(doc: RoCrateDocument) -> bytes:
    """Render a document back to JSON bytes (stable key order, UTF-8)."""
    context = list(doc.context) if isinstance(doc.context, tuple) else doc.context
    graph = []
    for node in doc.graph:
        entry: dict[str, Any] = {"@id": node.id, "@type": list(node.types)}
        entry.update(node.properties)
        graph.append(entry)
    payload = {"@context": context, "@graph": graph}
    return (json.dumps(payload, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


# -- profile reading --------------------------------------------------------


def _refs(value: Any) -> list[str]:
    """Normalize a JSON-LD reference property to a list of entity ids."""
    if value is None:
        return []
    items = value if isinstance(value, list) else [value]
    out: list[str] = []
    for item in items:
        if isinstance(item, dict) and isinstance(item.get("@id"), str):
            out.append(item["@id"])
        elif isinstance(item, str):
            out.append(item)
    return out


def _scalar(node: EntityNode, name: str, default: Any = None) -> Any:
    value = node.properties.get(name, default)
    if isinstance(value, list):
        return value[0] if value else default
    return value


def _text(node: EntityNode, name: str, default: str = "") -> str:
    value = _scalar(node, name, default)
    return default if value is None else str(value)


def _required_text(node: EntityNode, name: str) -> str:
    value = _scalar(node, name)
    if value is None or str(value) == "":
        raise ProfileViolation(
            f"entity {node.id!r} lacks required property {name!r}", entity_id=node.id
        )
    return str(value)


def _int(node: EntityNode, name: str, default: int = 0) -> int:
    value = _scalar(node, name, default)
    try:
        return int(value)
    except (TypeError, ValueError) as exc:
        raise ProfileViolation(
            f"entity {node.id!r} property {name!r} is not an integer", entity_id=node.id
        ) from exc


def _pid(node: EntityNode, name: str) -> Pid:
    raw = _required_text(node, name)
    try:
        return Pid(raw)
    except ValueError as exc:
        raise ProfileViolation(
            f"entity {node.id!r} property {name!r} is not a valid pid: {exc}",
            entity_id=node.id,
        ) from exc


def to_article(doc: RoCrateDocument) -> RebornArticle:
    """Map a parsed crate onto the knowledge model.

    Statements are taken in graph order.  A statement entity without an
    ``identifier`` gets a deterministic pid derived from the article pid and
    its ordinal, so re-ingesting the same crate cannot mint diverging ids.
    """
    root = doc.root
    article_pid = _pid(root, "identifier")
    original_doi = _pid(root, "originalPublication")

    authors: list[PersonRef] = []
    for ref in _refs(root.properties.get("author")):
        person = doc.entity(ref)
        identifier = _scalar(person, "identifier")
        try:
            pid = Pid(str(identifier)) if identifier else None
        except ValueError as exc:
            raise ProfileViolation(
                f"person {person.id!r} has malformed identifier: {exc}",
                entity_id=person.id,
            ) from exc
        authors.append(PersonRef(name=_text(person, "name"), identifier=pid))

    publisher = None
    publisher_refs = _refs(root.properties.get("publisher"))
    if publisher_refs:
        publisher = _text(doc.entity(publisher_refs[0]), "name") or None
    elif isinstance(root.properties.get("publisher"), str):
        publisher = root.properties["publisher"]

    statements: list[Statement] = []
    for ordinal, node in enumerate(doc.by_type("Statement"), start=1):
        statements.append(_read_statement(doc, node, article_pid, ordinal))

    return RebornArticle(
        pid=article_pid,
        original_doi=original_doi,
        title=_text(root, "name"),
        abstract_text=_text(root, "description"),
        authors=tuple(authors),
        journal=_scalar(root, "journal"),
        publisher=publisher,
        statements=tuple(statements),
    )


def _read_statement(
    doc: RoCrateDocument, node: EntityNode, article_pid: Pid, ordinal: int
) -> Statement:
    label = _required_text(node, "label")
    raw_pid = _scalar(node, "identifier")
    if raw_pid:
        try:
            stmt_pid = Pid(str(raw_pid))
        except ValueError as exc:
            raise ProfileViolation(
                f"statement {node.id!r} has malformed identifier: {exc}",
                entity_id=node.id,
            ) from exc
    else:
        stmt_pid = Pid(f"{article_pid.value}.s{ordinal}")

    concepts = []
    for ref in _refs(node.properties.get("about")):
        concept = doc.entity(ref)
        concepts.append(
            Concept(
                id=_text(concept, "conceptId", default=concept.id),
                label=_required_text(concept, "label"),
                description=_scalar(concept, "description"),
            )
        )

    evidence_refs = _refs(node.properties.get("evidence"))
    if not evidence_refs:
        raise ProfileViolation(
            f"statement {node.id!r} lacks an evidence reference", entity_id=node.id
        )
    evidence = _read_evidence(doc, doc.entity(evidence_refs[0]))

    return Statement(
        pid=stmt_pid,
        label=label,
        evidence=evidence,
        article_pid=article_pid,
        concepts=tuple(concepts),
    )


def _read_evidence(doc: RoCrateDocument, node: EntityNode) -> Evidence:
    parts = [
        _read_part(doc, doc.entity(ref)) for ref in _refs(node.properties.get("part"))
    ]
    code = []
    for ref in _refs(node.properties.get("sourceCode")):
        file_node = doc.entity(ref)
        try:
            content = base64.b64decode(_text(file_node, "contentBase64"), validate=True)
        except (ValueError, TypeError) as exc:
            raise ProfileViolation(
                f"file {file_node.id!r} has undecodable contentBase64",
                entity_id=file_node.id,
            ) from exc
        code.append(
            CodeFile(
                file_name=_required_text(file_node, "fileName"),
                language=_text(file_node, "programmingLanguage"),
                content=content,
            )
        )
    return Evidence(
        analysis_label=_text(node, "label"),
        data_type_pid=_pid(node, "dataType"),
        parts=tuple(parts),
        source_code=tuple(code),
    )


def _read_part(doc: RoCrateDocument, node: EntityNode) -> AnalysisPart:
    procedure = None
    proc_refs = _refs(node.properties.get("procedure"))
    if proc_refs:
        proc_node = doc.entity(proc_refs[0])
        raw_params = proc_node.properties.get("parameter", [])
        if isinstance(raw_params, dict):
            raw_params = [raw_params]
        parameters = tuple(
            (str(p.get("name", "")), str(p.get("value", "")))
            for p in raw_params
            if isinstance(p, dict)
        )
        procedure = ExecutedProcedure(
            language=_text(proc_node, "language"),
            package=_text(proc_node, "package"),
            function_name=_text(proc_node, "function"),
            parameters=parameters,
        )
    return AnalysisPart(
        label=_text(node, "label"),
        procedure=procedure,
        inputs=tuple(
            _read_item(doc, doc.entity(ref))
            for ref in _refs(node.properties.get("inputData"))
        ),
        outputs=tuple(
            _read_item(doc, doc.entity(ref))
            for ref in _refs(node.properties.get("outputData"))
        ),
        components=tuple(
            _read_component(doc.entity(ref))
            for ref in _refs(node.properties.get("component"))
        ),
    )


def _read_component(node: EntityNode) -> Component:
    return Component(
        role=_text(node, "role"),
        variable_name=_required_text(node, "variableName"),
        unit=_scalar(node, "unit"),
    )


def _read_item(doc: RoCrateDocument, node: EntityNode) -> DataItem:
    raw_source = node.properties.get("source")
    if not isinstance(raw_source, dict):
        raise ProfileViolation(
            f"data item {node.id!r} lacks a source object", entity_id=node.id
        )
    if "table" in raw_source:
        rows = raw_source["table"]
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise ProfileViolation(
                f"data item {node.id!r} table must be a list of rows", entity_id=node.id
            )
        source: TableSource | UrlSource = TableSource(
            tuple(tuple(str(c) for c in row) for row in rows)
        )
    elif "url" in raw_source:
        source = UrlSource(str(raw_source["url"]))
    else:
        raise ProfileViolation(
            f"data item {node.id!r} source must carry table or url", entity_id=node.id
        )

    figure = None
    fig_refs = _refs(node.properties.get("figure"))
    if fig_refs:
        fig_node = doc.entity(fig_refs[0])
        figure = FigureRef(
            file_name=_required_text(fig_node, "fileName"),
            media_type=_text(fig_node, "encodingFormat"),
            caption=_scalar(fig_node, "description"),
        )

    return DataItem(
        label=_text(node, "label"),
        source=source,
        matrix_rows=_int(node, "matrixRows"),
        matrix_cols=_int(node, "matrixCols"),
        components=tuple(
            _read_component(doc.entity(ref))
            for ref in _refs(node.properties.get("component"))
        ),
        figure=figure,
    )


# -- profile writing --------------------------------------------------------


def article_to_document(article: RebornArticle) -> RoCrateDocument:
    """Build the crate graph for an article (inverse of :func:`to_article`)."""
    concept_nodes: dict[str, EntityNode] = {}
    statement_nodes: list[EntityNode] = []
    evidence_nodes: list[EntityNode] = []
    for i, stmt in enumerate(article.statements, start=1):
        sid = f"#statement-{i}"
        about = []
        for concept in stmt.concepts:
            cid = f"#concept-{quote(concept.id, safe='')}"
            if cid not in concept_nodes:
                cprops: dict[str, Any] = {"conceptId": concept.id, "label": concept.label}
                if concept.description is not None:
                    cprops["description"] = concept.description
                concept_nodes[cid] = EntityNode(cid, ("Concept",), cprops)
            about.append({"@id": cid})
        sprops: dict[str, Any] = {
            "identifier": stmt.pid.value,
            "label": stmt.label,
        }
        if about:
            sprops["about"] = about
        sprops["evidence"] = {"@id": f"{sid}-analysis"}
        statement_nodes.append(EntityNode(sid, ("Statement",), sprops))
        evidence_nodes.extend(_write_evidence(stmt.evidence, sid))

    root_props: dict[str, Any] = {
        "identifier": article.pid.value,
        "originalPublication": article.original_doi.value,
        "name": article.title,
        "description": article.abstract_text,
    }
    author_ids = [f"#person-{i}" for i in range(1, len(article.authors) + 1)]
    if author_ids:
        root_props["author"] = [{"@id": aid} for aid in author_ids]
    if article.journal is not None:
        root_props["journal"] = article.journal
    if article.publisher is not None:
        root_props["publisher"] = {"@id": "#publisher"}
    if statement_nodes:
        root_props["statement"] = [{"@id": n.id} for n in statement_nodes]

    nodes: list[EntityNode] = [
        EntityNode(
            METADATA_FILE_NAME,
            ("CreativeWork",),
            {
                "conformsTo": {"@id": "https://w3id.org/ro/crate/1.1"},
                "about": {"@id": ROOT_ID},
            },
        ),
        EntityNode(ROOT_ID, ("Dataset",), root_props),
    ]
    for aid, author in zip(author_ids, article.authors):
        props: dict[str, Any] = {"name": author.name}
        if author.identifier is not None:
            props["identifier"] = author.identifier.value
        nodes.append(EntityNode(aid, ("Person",), props))
    if article.publisher is not None:
        nodes.append(EntityNode("#publisher", ("Publisher",), {"name": article.publisher}))
    nodes.extend(concept_nodes.values())
    nodes.extend(statement_nodes)
    nodes.extend(evidence_nodes)
    return RoCrateDocument(context=ROCRATE_CONTEXT, graph=tuple(nodes))


def _write_evidence(evidence: Evidence, sid: str) -> list[EntityNode]:
    nodes: list[EntityNode] = []
    aid = f"{sid}-analysis"
    part_ids = [f"{aid}-part-{j}" for j in range(1, len(evidence.parts) + 1)]
    code_ids = [f"{sid}-code-{k}" for k in range(1, len(evidence.source_code) + 1)]
    aprops: dict[str, Any] = {
        "componentRole": "analysis",
        "label": evidence.analysis_label,
        "dataType": evidence.data_type_pid.value,
    }
    if part_ids:
        aprops["part"] = [{"@id": p} for p in part_ids]
    if code_ids:
        aprops["sourceCode"] = [{"@id": c} for c in code_ids]
    nodes.append(EntityNode(aid, ("Component",), aprops))

    for pid_, part in zip(part_ids, evidence.parts):
        pprops: dict[str, Any] = {"componentRole": "analysis-part", "label": part.label}
        if part.procedure is not None:
            proc_id = f"{pid_}-procedure"
            pprops["procedure"] = {"@id": proc_id}
            proc = part.procedure
            proc_props: dict[str, Any] = {
                "componentRole": "procedure",
                "language": proc.language,
                "package": proc.package,
                "function": proc.function_name,
            }
            if proc.parameters:
                proc_props["parameter"] = [
                    {"name": name, "value": value} for name, value in proc.parameters
                ]
            nodes.append(EntityNode(proc_id, ("Component",), proc_props))
        for kind, prop, items in (
            ("input", "inputData", part.inputs),
            ("output", "outputData", part.outputs),
        ):
            ids = [f"{pid_}-{kind}-{m}" for m in range(1, len(items) + 1)]
            if ids:
                pprops[prop] = [{"@id": i} for i in ids]
            for item_id, item in zip(ids, items):
                nodes.extend(_write_item(item_id, item))
        comp_ids = [f"{pid_}-variable-{m}" for m in range(1, len(part.components) + 1)]
        if comp_ids:
            pprops["component"] = [{"@id": c} for c in comp_ids]
        for comp_id, comp in zip(comp_ids, part.components):
            nodes.append(_write_component(comp_id, comp))
        nodes.append(EntityNode(pid_, ("Component",), pprops))

    for code_id, code in zip(code_ids, evidence.source_code):
        nodes.append(
            EntityNode(
                code_id,
                ("File",),
                {
                    "fileName": code.file_name,
                    "programmingLanguage": code.language,
                    "contentBase64": base64.b64encode(code.content).decode("ascii"),
                },
            )
        )
    return nodes


def _write_component(comp_id: str, comp: Component) -> EntityNode:
    props: dict[str, Any] = {
        "componentRole": "variable",
        "role": comp.role,
        "variableName": comp.variable_name,
    }
    if comp.unit is not None:
        props["unit"] = comp.unit
    return EntityNode(comp_id, ("Component",), props)


def _write_item(item_id: str, item: DataItem) -> list[EntityNode]:
    nodes: list[EntityNode] = []
    props: dict[str, Any] = {
        "componentRole": "data-item",
        "label": item.label,
        "matrixRows": item.matrix_rows,
        "matrixCols": item.matrix_cols,
    }
    if isinstance(item.source, TableSource):
        props["source"] = {"table": [list(row) for row in item.source.rows]}
    else:
        props["source"] = {"url": item.source.url}
    comp_ids = [f"{item_id}-variable-{p}" for p in range(1, len(item.components) + 1)]
    if comp_ids:
        props["component"] = [{"@id": c} for c in comp_ids]
    for comp_id, comp in zip(comp_ids, item.components):
        nodes.append(_write_component(comp_id, comp))
    if item.figure is not None:
        fig_id = f"{item_id}-figure"
        props["figure"] = {"@id": fig_id}
        fig_props: dict[str, Any] = {
            "fileName": item.figure.file_name,
            "encodingFormat": item.figure.media_type,
        }
        if item.figure.caption is not None:
            fig_props["description"] = item.figure.caption
        nodes.append(EntityNode(fig_id, ("File",), fig_props))
    nodes.append(EntityNode(item_id, ("Component",), props))
    return nodes


def serialize_rocrate(article: RebornArticle) -> bytes:
    return serialize_document(article_to_document(article))


# -- harvesting -------------------------------------------------------------


class RepositorySource(Protocol):
    """Read-only, idempotent access to deposited crates keyed by DOI."""

    def fetch_by_doi(self, doi: Pid) -> bytes: ...


class LocalDirectorySource:
    """Crates on disk: ``{root}/{percent-encoded doi}/ro-crate-metadata.json``."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)

    def fetch_by_doi(self, doi: Pid) -> bytes:
        path = self.root / quote(doi.value, safe="") / METADATA_FILE_NAME
        if not path.is_file():
            raise NotDeposited(f"no crate deposited for {doi}", doi=doi.value)
        try:
            return path.read_bytes()
        except OSError as exc:
            raise SourceUnreachable(f"cannot read {path}: {exc}") from exc


class HttpRepositorySource:
    """Crates behind ``GET {base}/{encoded-doi}/ro-crate-metadata.json``."""

    def __init__(
        self,
        base_url: str,
        timeout: float = 10.0,
        bearer_token: str | None = None,
        client=None,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.bearer_token = bearer_token
        self._client = client

    def fetch_by_doi(self, doi: Pid) -> bytes:
        import httpx

        url = f"{self.base_url}/{quote(doi.value, safe='')}/{METADATA_FILE_NAME}"
        headers = {}
        if self.bearer_token:
            headers["Authorization"] = f"Bearer {self.bearer_token}"
        try:
            if self._client is not None:
                response = self._client.get(url, headers=headers, timeout=self.timeout)
            else:
                response = httpx.get(url, headers=headers, timeout=self.timeout)
        except httpx.HTTPError as exc:
            raise SourceUnreachable(f"GET {url} failed: {exc}") from exc
        if response.status_code == 404:
            raise NotDeposited(f"no crate deposited for {doi}", doi=doi.value)
        if response.status_code != 200:
            raise SourceUnreachable(
                f"GET {url} returned status {response.status_code}"
            )
        return response.content


def fetch_crate_bytes(doi: Pid, source: RepositorySource) -> bytes:
    """Fetch the raw metadata JSON for a DOI, unwrapping ZIP depositions."""
    data = source.fetch_by_doi(doi)
    if data[:2] == b"PK":
        try:
            with zipfile.ZipFile(io.BytesIO(data)) as archive:
                members = [
                    n for n in archive.namelist() if n.endswith(METADATA_FILE_NAME)
                ]
                if not members:
                    raise MalformedJson(
                        f"crate archive for {doi} lacks {METADATA_FILE_NAME}"
                    )
                return archive.read(sorted(members, key=len)[0])
        except zipfile.BadZipFile as exc:
            raise MalformedJson(f"crate archive for {doi} is not a ZIP: {exc}") from exc
    return data


def harvest(doi: Pid, source: RepositorySource) -> RoCrateDocument:
    """Fetch and parse the crate deposited under ``doi``."""
    return parse_rocrate(fetch_crate_bytes(doi, source))
