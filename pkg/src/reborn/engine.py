"""Service core: wires registry, catalog, indexes, and the search pipeline.

The HTTP layer and the CLI are thin shells around :class:`KnowledgeService`.
Ingestion is funneled through one lock (single-writer model) and is atomic:
embeddings are computed before anything is stored, so a failure leaves both
catalog and indexes untouched.  Searches run lock-free over the current
snapshots.
"""
from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .catalog import Catalog, CatalogRecord
from .config import (
    EMBEDDER_REMOTE,
    REPOSITORY_HTTP,
    ServiceConfig,
)
from .dense import HashingEmbedder, RemoteEmbedder, VectorIndex
from .dtr import DataTypeRegistry, seed_registry
from .errors import NotFound, RebornError, SourceUnreachable, ValidationFailed
from .fusion import FusionWeights, HybridSearchPipeline, ScoredHit
from .model import (
    CodeFile,
    Pid,
    RebornArticle,
    Statement,
    ValidationReport,
    statement_fulltext,
    validate_article,
)
from .rocrate import (
    HttpRepositorySource,
    LocalDirectorySource,
    RepositorySource,
    fetch_crate_bytes,
    parse_rocrate,
    to_article,
)
from .sparse import IndexedDoc, SparseIndex
from .text import tokenize

logger = logging.getLogger(__name__)

REGISTRY_FILE = "registry.json"
SPARSE_INDEX_FILE = "index/sparse.json"
DENSE_INDEX_FILE = "index/dense.bin"


@dataclass(frozen=True)
class SearchResult:
    hit: ScoredHit
    statement: Statement
    article: RebornArticle
    path_scores: dict[str, float]


class KnowledgeService:
    def __init__(
        self,
        config: ServiceConfig,
        repository: RepositorySource | None = None,
    ) -> None:
        self.config = config
        self.data_dir = Path(config.data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)

        registry_path = self.data_dir / REGISTRY_FILE
        if registry_path.exists():
            self.registry = DataTypeRegistry.load(registry_path)
        else:
            self.registry = seed_registry()
            self.registry.save(registry_path)

        self.catalog = Catalog(self.data_dir / "catalog", self.registry)
        self.embedder = self._build_embedder(config)
        self.repository = repository if repository is not None else self._build_repository(config)

        self._ingest_lock = threading.Lock()
        self.sparse_index, self.dense_index = self._load_or_rebuild_indexes()
        self.pipeline = HybridSearchPipeline(
            self.sparse_index,
            self.dense_index,
            self.embedder,
            weights=config.weights,
            rerank_n=config.rerank_n,
            candidate_multiplier=config.candidate_multiplier,
        )

    # -- construction helpers ---------------------------------------------

    @staticmethod
    def _build_embedder(config: ServiceConfig):
        if config.embedder_kind == EMBEDDER_REMOTE:
            if not config.embedder_endpoint:
                raise ValueError("remote embedder selected but no endpoint configured")
            return RemoteEmbedder(config.embedder_endpoint, dim=config.embedder_dim)
        return HashingEmbedder(dim=config.embedder_dim, seed=config.embedder_seed)

    @staticmethod
    def _build_repository(config: ServiceConfig) -> RepositorySource | None:
        if config.repository_kind == REPOSITORY_HTTP and config.repository_base_url:
            return HttpRepositorySource(config.repository_base_url)
        if config.repository_path is not None:
            return LocalDirectorySource(config.repository_path)
        return None

    def _new_indexes(self) -> tuple[SparseIndex, VectorIndex]:
        sparse = SparseIndex(
            boosts=self.config.effective_boosts(),
            k1=self.config.sparse_k1,
            b=self.config.sparse_b,
        )
        dense = VectorIndex(
            dim=self.embedder.dim(),
            encoder_name=self.embedder.name(),
            params=self.config.hnsw,
            seed=self.config.index_seed,
        )
        return sparse, dense

    def _load_or_rebuild_indexes(self) -> tuple[SparseIndex, VectorIndex]:
        sparse_path = self.data_dir / SPARSE_INDEX_FILE
        dense_path = self.data_dir / DENSE_INDEX_FILE
        if sparse_path.exists() and dense_path.exists():
            try:
                sparse = SparseIndex.load(sparse_path)
                dense = VectorIndex.load(dense_path)
                dense.ensure_encoder(self.embedder.name())
                if len(sparse) == self.catalog.statement_count():
                    return sparse, dense
                logger.warning("index/catalog count mismatch; rebuilding indexes")
            except RebornError as exc:
                logger.warning("stored indexes unusable (%s); rebuilding", exc.message)
        sparse, dense = self._rebuild_indexes()
        if self.catalog.statement_count():
            self._persist_indexes(sparse, dense)
        return sparse, dense

    def _rebuild_indexes(self) -> tuple[SparseIndex, VectorIndex]:
        sparse, dense = self._new_indexes()
        for statement, article in self.catalog.iter_statements():
            doc, vector = self._statement_entry(statement, article)
            sparse.add_document(doc)
            dense.add_vector(statement.pid, vector)
        return sparse, dense

    def _persist_indexes(self, sparse: SparseIndex, dense: VectorIndex) -> None:
        sparse.save(self.data_dir / SPARSE_INDEX_FILE)
        dense.save(self.data_dir / DENSE_INDEX_FILE)

    # -- indexing -----------------------------------------------------------

    def type_name(self, pid: Pid) -> str | None:
        return self.registry.resolve(pid).name if self.registry.contains(pid) else None

    def _statement_entry(self, statement: Statement, article: RebornArticle):
        fulltext = statement_fulltext(statement, article, self.type_name)
        if not tokenize(fulltext):
            raise ValidationFailed(
                f"statement {statement.pid} has no indexable tokens"
            )
        doc = IndexedDoc.make(
            statement.pid,
            label=statement.label,
            fulltext=fulltext,
            abstract=article.abstract_text,
        )
        return doc, self.embedder.embed(fulltext)

    # -- ingestion ------------------------------------------------------------

    def ingest_crate_bytes(self, data: bytes) -> tuple[Pid, int]:
        """Parse, validate, store, and index one crate.  Atomic."""
        document = parse_rocrate(data)
        article = to_article(document)
        report = validate_article(article, self.registry)
        if not report.ok:
            raise ValidationFailed(
                f"article {article.pid} failed validation "
                f"with {len(report.violations)} violation(s)",
                report=report,
            )
        with self._ingest_lock:
            # Embed up front: after this point no step can fail, so a raised
            # error leaves catalog and indexes exactly as they were.
            entries = [self._statement_entry(s, article) for s in article.statements]
            record = CatalogRecord(
                article=article,
                ingested_at=int(time.time()),
                crate_bytes=data,
            )
            old = None
            if self.catalog.has_article(article.pid):
                old = self.catalog.get_article(article.pid).article
            self.catalog.put_article(record)
            if old is not None:
                for statement in old.statements:
                    self.sparse_index.remove_document(statement.pid)
                    self.dense_index.remove_vector(statement.pid)
            for (doc, vector), statement in zip(entries, article.statements):
                self.sparse_index.add_document(doc)
                self.dense_index.add_vector(statement.pid, vector)
            self._persist_indexes(self.sparse_index, self.dense_index)
        return article.pid, len(article.statements)

    def ingest_doi(self, doi: str) -> tuple[Pid, int]:
        if self.repository is None:
            raise SourceUnreachable("no repository source configured")
        try:
            pid = Pid(doi)
        except ValueError as exc:
            raise NotFound(f"not a valid doi: {exc}", doi=doi) from exc
        return self.ingest_crate_bytes(fetch_crate_bytes(pid, self.repository))

    def validate_crate_bytes(self, data: bytes) -> ValidationReport:
        """Validation dry run: parse errors raise, violations come back as data."""
        article = to_article(parse_rocrate(data))
        return validate_article(article, self.registry)

    def reindex(self) -> dict[str, int]:
        """Rebuild both indexes from the catalog and swap them in."""
        with self._ingest_lock:
            sparse, dense = self._rebuild_indexes()
            self.sparse_index = sparse
            self.dense_index = dense
            self.pipeline.sparse_index = sparse
            self.pipeline.dense_index = dense
            self._persist_indexes(sparse, dense)
            return {
                "articles": self.catalog.article_count(),
                "statements_sparse": len(sparse),
                "statements_dense": dense.count(),
            }

    # -- queries ----------------------------------------------------------------

    def search(
        self, query: str, k: int = 10, w_sparse: float | None = None
    ) -> list[SearchResult]:
        weights = (
            FusionWeights.from_sparse(w_sparse) if w_sparse is not None else None
        )
        hits, path_scores = self.pipeline.search_with_paths(query, k, weights)
        results = []
        for hit in hits:
            statement, article = self.catalog.get_statement(hit.doc_id)
            results.append(
                SearchResult(
                    hit=hit,
                    statement=statement,
                    article=article,
                    path_scores=path_scores.get(hit.doc_id, {}),
                )
            )
        return results

    def article_page(self, page: int, page_size: int) -> tuple[list[CatalogRecord], int]:
        records = self.catalog.list_articles()
        start = (page - 1) * page_size
        return records[start : start + page_size], len(records)

    def code_file(self, statement_pid: Pid, file_name: str) -> CodeFile:
        statement, _ = self.catalog.get_statement(statement_pid)
        for code in statement.evidence.source_code:
            if code.file_name == file_name:
                return code
        raise NotFound(
            f"statement {statement_pid} has no code file {file_name!r}",
            file_name=file_name,
        )

    def download(self, pid_values: list[str]) -> bytes:
        pids = []
        for value in pid_values:
            try:
                pids.append(Pid(value))
            except ValueError as exc:
                raise NotFound(f"not a valid pid: {exc}", missing=[value]) from exc
        return self.catalog.package_zip(pids)

    def stats(self) -> dict[str, Any]:
        return {
            "articles": self.catalog.article_count(),
            "statements": self.catalog.statement_count(),
            "encoder": self.embedder.name(),
        }
