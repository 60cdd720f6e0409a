"""FastAPI application wrapping :class:`~reborn.engine.KnowledgeService`."""
from __future__ import annotations

import json
import logging
import time
from datetime import datetime, timezone

from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse

from ..config import ServiceConfig, load_config
from ..engine import KnowledgeService
from ..errors import EmptySelection, RebornError
from ..model import Pid
from . import schemas

access_log = logging.getLogger("reborn.api.access")

_STATUS_BY_CODE = {
    "MALFORMED_JSON": 400,
    "MISSING_GRAPH": 400,
    "MISSING_ROOT": 400,
    "PROFILE_VIOLATION": 400,
    "VALIDATION_FAILED": 400,
    "EMPTY_QUERY": 400,
    "EMPTY_TEXT": 400,
    "BAD_WEIGHTS": 400,
    "EMPTY_SELECTION": 400,
    "NOT_FOUND": 404,
    "NOT_DEPOSITED": 404,
    "DUPLICATE_PID": 409,
    "SOURCE_UNREACHABLE": 502,
}

MAX_K = 100


def create_app(
    config: ServiceConfig | None = None,
    service: KnowledgeService | None = None,
) -> FastAPI:
    if service is None:
        service = KnowledgeService(config if config is not None else load_config())

    app = FastAPI(title="reborn", version="0.1.0", docs_url="/api/docs", openapi_url="/api/openapi.json")
    app.state.service = service

    @app.exception_handler(RebornError)
    async def reborn_error_handler(request: Request, exc: RebornError) -> JSONResponse:
        status = _STATUS_BY_CODE.get(exc.code, 500)
        return JSONResponse(status_code=status, content={"error": exc.to_dict()})

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "BAD_REQUEST", "message": str(exc)}},
        )

    @app.middleware("http")
    async def log_requests(request: Request, call_next):
        started = time.perf_counter()
        response = await call_next(request)
        access_log.info(
            "%s",
            json.dumps(
                {
                    "method": request.method,
                    "path": request.url.path,
                    "status": response.status_code,
                    "duration_ms": round((time.perf_counter() - started) * 1000, 2),
                },
                sort_keys=True,
            ),
        )
        return response

    @app.post("/api/ingest", response_model=schemas.IngestResponse)
    async def ingest(request: Request) -> schemas.IngestResponse:
        body = await request.body()
        doi = _doi_request(body)
        if doi is not None:
            pid, indexed = service.ingest_doi(doi)
        else:
            pid, indexed = service.ingest_crate_bytes(body)
        return schemas.IngestResponse(article_pid=pid.value, statements_indexed=indexed)

    @app.get("/api/search", response_model=schemas.SearchResponse)
    def search(
        q: str,
        k: int = Query(default=10, ge=1),
        w_sparse: float | None = Query(default=None),
    ) -> schemas.SearchResponse:
        k = min(k, MAX_K)
        results = service.search(q, k=k, w_sparse=w_sparse)
        effective_w = (
            w_sparse if w_sparse is not None else service.config.weights.w_sparse
        )
        return schemas.SearchResponse(
            query=q,
            k=k,
            w_sparse=effective_w,
            hits=[schemas.SearchHit.from_domain(r) for r in results],
        )

    @app.get("/api/articles", response_model=schemas.ArticleList)
    def list_articles(
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=20, ge=1, le=100),
    ) -> schemas.ArticleList:
        records, total = service.article_page(page, page_size)
        return schemas.ArticleList(
            items=[schemas.ArticleSummary.from_domain(r) for r in records],
            page=page,
            page_size=page_size,
            total=total,
        )

    @app.get("/api/articles/{pid:path}", response_model=schemas.ArticleDetail)
    def get_article(pid: str) -> schemas.ArticleDetail:
        record = service.catalog.get_article(_parse_pid(pid))
        return schemas.ArticleDetail.from_domain(record)

    @app.get("/api/statements/{pid:path}/code/{file_name}")
    def get_code_file(pid: str, file_name: str) -> Response:
        code = service.code_file(_parse_pid(pid), file_name)
        return Response(
            content=code.content,
            media_type="text/plain; charset=utf-8",
            headers={"Content-Disposition": f'inline; filename="{code.file_name}"'},
        )

    @app.get("/api/statements/{pid:path}", response_model=schemas.StatementDetail)
    def get_statement(pid: str) -> schemas.StatementDetail:
        statement, article = service.catalog.get_statement(_parse_pid(pid))
        return schemas.StatementDetail.from_domain(statement, article, service)

    @app.get("/api/download")
    def download(ids: str = "") -> Response:
        values = [v for v in (part.strip() for part in ids.split(",")) if v]
        if not values:
            raise EmptySelection("no statement ids given")
        payload = service.download(values)
        stamp = datetime.now(timezone.utc).strftime("%Y%m%d")
        filename = f"statements-{len(values)}-{stamp}.zip"
        return Response(
            content=payload,
            media_type="application/zip",
            headers={"Content-Disposition": f'attachment; filename="{filename}"'},
        )

    @app.get("/api/types", response_model=list[schemas.DataTypeOut])
    def list_types() -> list[schemas.DataTypeOut]:
        return [schemas.DataTypeOut.from_domain(d) for d in service.registry.list_types()]

    @app.post("/api/validate", response_model=schemas.ValidationResponse)
    async def validate(request: Request) -> schemas.ValidationResponse:
        report = service.validate_crate_bytes(await request.body())
        return schemas.ValidationResponse.from_domain(report)

    @app.post("/api/admin/reindex", response_model=schemas.ReindexResponse)
    def reindex() -> schemas.ReindexResponse:
        return schemas.ReindexResponse(**service.reindex())

    @app.get("/api/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        stats = service.stats()
        return schemas.HealthResponse(status="ok", **stats)

    ui_dir = service.config.ui_dir
    if ui_dir is not None and ui_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _parse_pid(raw: str) -> Pid:
    from ..errors import NotFound

    try:
        return Pid(raw)
    except ValueError as exc:
        raise NotFound(f"not a valid pid: {exc}", pid=raw) from exc


def _doi_request(body: bytes) -> str | None:
    """Detect the `{"doi": "..."}` harvest form of /api/ingest."""
    try:
        payload = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        return None
    if isinstance(payload, dict) and set(payload.keys()) == {"doi"}:
        doi = payload["doi"]
        if isinstance(doi, str):
            return doi
    return None
