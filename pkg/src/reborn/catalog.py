"""Durable article/statement catalog, PID minting, and ZIP packaging.

Persistence is an append-only JSONL record log plus a periodically compacted
snapshot; each record stores the original crate bytes, and articles are
rebuilt from those bytes on load, so the stored model can never drift from
its crate.  Readers work off in-memory maps; the single writer appends to
the log, fsyncs, then swaps the maps.
"""
from __future__ import annotations

import base64
import csv
import io
import json
import logging
import os
import random
import string
import threading
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .dtr import DataTypeRegistry
from .errors import EmptySelection, Exhausted, NotFound, ValidationFailed
from .model import (
    Concept,
    DataItem,
    Pid,
    RebornArticle,
    Statement,
    TableSource,
    UrlSource,
    validate_article,
)
from .rocrate import parse_rocrate, serialize_rocrate, to_article

logger = logging.getLogger(__name__)

LOG_FILE = "log.jsonl"
SNAPSHOT_FILE = "snapshot.json"

_SNAPSHOT_VERSION = 1
_COMPACT_EVERY = 256

PID_SUFFIX_ALPHABET = string.ascii_lowercase + string.digits


@dataclass(frozen=True)
class CatalogRecord:
    article: RebornArticle
    ingested_at: int
    crate_bytes: bytes


@dataclass(frozen=True)
class PidMintConfig:
    prefix: str = "10.48366"
    suffix_length: int = 8

    def __post_init__(self) -> None:
        if not self.prefix:
            raise ValueError("pid prefix must be non-empty")
        if self.suffix_length < 4:
            raise ValueError("pid suffix_length must be >= 4")


def mint_pid(
    cfg: PidMintConfig,
    is_taken: Callable[[Pid], bool],
    rng: random.Random,
) -> Pid:
    """Draw random suffixes until one is free; EXHAUSTED after 100 misses."""
    for _ in range(100):
        suffix = "".join(rng.choices(PID_SUFFIX_ALPHABET, k=cfg.suffix_length))
        candidate = Pid(f"{cfg.prefix}/{suffix}")
        if not is_taken(candidate):
            return candidate
    raise Exhausted(
        f"could not mint a free pid under {cfg.prefix}/ after 100 attempts"
    )


class Catalog:
    """Article store backed by ``<dir>/log.jsonl`` and ``<dir>/snapshot.json``."""

    def __init__(self, directory: str | Path, registry: DataTypeRegistry) -> None:
        self.directory = Path(directory)
        self.registry = registry
        self.directory.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()
        self._records: dict[Pid, CatalogRecord] = {}
        self._statements: dict[Pid, tuple[Statement, Pid]] = {}
        self._minted: set[Pid] = set()
        self._mint_rng = random.Random()
        self._puts_since_compact = 0
        self._load()

    # -- read side --------------------------------------------------------

    def article_count(self) -> int:
        return len(self._records)

    def statement_count(self) -> int:
        return len(self._statements)

    def has_article(self, pid: Pid) -> bool:
        return pid in self._records

    def get_article(self, pid: Pid) -> CatalogRecord:
        record = self._records.get(pid)
        if record is None:
            raise NotFound(f"article {pid} is not in the catalog", pid=pid.value)
        return record

    def get_statement(self, pid: Pid) -> tuple[Statement, RebornArticle]:
        entry = self._statements.get(pid)
        if entry is None:
            raise NotFound(f"statement {pid} is not in the catalog", pid=pid.value)
        statement, article_pid = entry
        return statement, self._records[article_pid].article

    def list_articles(self) -> list[CatalogRecord]:
        """All records, stable-ordered by (ingested_at, pid)."""
        return sorted(
            self._records.values(), key=lambda r: (r.ingested_at, r.article.pid.value)
        )

    def iter_statements(self) -> Iterable[tuple[Statement, RebornArticle]]:
        for record in self.list_articles():
            for statement in record.article.statements:
                yield statement, record.article

    def concepts(self) -> list[Concept]:
        """Distinct concepts across the catalog, sorted by id; later puts win."""
        seen: dict[str, Concept] = {}
        for record in self.list_articles():
            for statement in record.article.statements:
                for concept in statement.concepts:
                    seen[concept.id] = concept
        return [seen[key] for key in sorted(seen)]

    # -- write side -------------------------------------------------------

    def put_article(self, record: CatalogRecord) -> Pid:
        report = validate_article(record.article, self.registry)
        if not report.ok:
            raise ValidationFailed(
                f"article {record.article.pid} failed validation "
                f"with {len(report.violations)} violation(s)",
                report=report,
            )
        reparsed = to_article(parse_rocrate(record.crate_bytes))
        if reparsed != record.article:
            raise ValidationFailed(
                f"crate bytes for {record.article.pid} do not reparse to the article"
            )
        with self._write_lock:
            self._append_log(record)
            self._apply(record)
            self._puts_since_compact += 1
            if self._puts_since_compact >= _COMPACT_EVERY:
                self._compact_locked()
        return record.article.pid

    def mint_pid(self, cfg: PidMintConfig, rng_seed: int | None = None) -> Pid:
        """Mint a pid free of every article, statement, and prior mint.

        Reservations live in memory: a minted pid is held until it shows up
        in a put, so two mints never return the same value even when
        re-seeded identically.
        """
        if rng_seed is not None:
            self._mint_rng = random.Random(rng_seed)

        def is_taken(pid: Pid) -> bool:
            return pid in self._records or pid in self._statements or pid in self._minted

        pid = mint_pid(cfg, is_taken, self._mint_rng)
        self._minted.add(pid)
        return pid

    def compact(self) -> None:
        with self._write_lock:
            self._compact_locked()

    # -- packaging ---------------------------------------------------------

    def package_zip(self, statement_pids: Sequence[Pid]) -> bytes:
        if not statement_pids:
            raise EmptySelection("no statement pids selected for download")
        missing = [p.value for p in statement_pids if p not in self._statements]
        if missing:
            raise NotFound(
                f"statements not in catalog: {', '.join(missing)}", missing=missing
            )
        pairs = []
        for pid in statement_pids:
            statement, article_pid = self._statements[pid]
            pairs.append((statement, self._records[article_pid].article))
        return package_statements(pairs)

    # -- persistence -------------------------------------------------------

    def _append_log(self, record: CatalogRecord) -> None:
        line = json.dumps(_record_to_json(record), ensure_ascii=False)
        with open(self.directory / LOG_FILE, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _apply(self, record: CatalogRecord) -> None:
        pid = record.article.pid
        old = self._records.get(pid)
        if old is not None:
            for statement in old.article.statements:
                self._statements.pop(statement.pid, None)
        self._records[pid] = record
        for statement in record.article.statements:
            self._statements[statement.pid] = (statement, pid)
        self._minted.discard(pid)

    def _load(self) -> None:
        snapshot_path = self.directory / SNAPSHOT_FILE
        if snapshot_path.exists():
            payload = json.loads(snapshot_path.read_text(encoding="utf-8"))
            for entry in payload["records"]:
                self._apply(_record_from_json(entry))
        log_path = self.directory / LOG_FILE
        if log_path.exists():
            raw = log_path.read_bytes()
            for i, line in enumerate(raw.split(b"\n")):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line.decode("utf-8"))
                except (json.JSONDecodeError, UnicodeDecodeError):
                    # A torn tail from a crash mid-append is expected; any
                    # other corruption would fail the reparse below instead.
                    logger.warning("dropping undecodable log line %d", i + 1)
                    continue
                self._apply(_record_from_json(entry))

    def _compact_locked(self) -> None:
        payload = {
            "version": _SNAPSHOT_VERSION,
            "records": [_record_to_json(r) for r in self.list_articles()],
        }
        snapshot_path = self.directory / SNAPSHOT_FILE
        tmp = snapshot_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
        tmp.replace(snapshot_path)
        log_path = self.directory / LOG_FILE
        if log_path.exists():
            log_path.unlink()
        self._puts_since_compact = 0


def _record_to_json(record: CatalogRecord) -> dict:
    return {
        "pid": record.article.pid.value,
        "ingested_at": record.ingested_at,
        "crate": base64.b64encode(record.crate_bytes).decode("ascii"),
    }


def _record_from_json(entry: dict) -> CatalogRecord:
    crate_bytes = base64.b64decode(entry["crate"])
    article = to_article(parse_rocrate(crate_bytes))
    return CatalogRecord(
        article=article,
        ingested_at=int(entry["ingested_at"]),
        crate_bytes=crate_bytes,
    )


# -- ZIP packaging ----------------------------------------------------------


def encode_pid_for_path(pid: Pid) -> str:
    return pid.value.replace("/", "_")


def package_statements(pairs: Sequence[tuple[Statement, RebornArticle]]) -> bytes:
    """Package statements into the download ZIP.

    Layout: root ``manifest.json`` first, then one ``statement-<pid>/``
    directory per statement (sorted by pid) holding ``statement.jsonld``
    (a single-statement crate), ``code/`` files, and ``data/`` with inline
    tables as CSV plus ``links.json`` for URL-sourced items.  Entry metadata
    is pinned (timestamps, permissions), so equal inputs give equal bytes.
    """
    if not pairs:
        raise EmptySelection("no statements selected for download")

    entries: list[tuple[str, bytes]] = []
    for statement, article in sorted(pairs, key=lambda p: p[0].pid.value):
        prefix = f"statement-{encode_pid_for_path(statement.pid)}/"
        crate = serialize_rocrate(article.with_statements([statement]))
        entries.append((prefix + "statement.jsonld", crate))
        for code_file in statement.evidence.source_code:
            entries.append((prefix + f"code/{code_file.file_name}", code_file.content))
        links: list[dict] = []
        for i, part in enumerate(statement.evidence.parts, start=1):
            for kind, items in (("input", part.inputs), ("output", part.outputs)):
                for j, item in enumerate(items, start=1):
                    if isinstance(item.source, TableSource):
                        entries.append(
                            (
                                prefix + f"data/part{i}-{kind}{j}.csv",
                                _item_to_csv(item),
                            )
                        )
                    elif isinstance(item.source, UrlSource):
                        links.append(
                            {
                                "part": i,
                                "kind": kind,
                                "index": j,
                                "label": item.label,
                                "url": item.source.url,
                            }
                        )
        if links:
            entries.append(
                (
                    prefix + "data/links.json",
                    json.dumps({"links": links}, ensure_ascii=False, indent=2).encode(
                        "utf-8"
                    ),
                )
            )

    manifest = {
        "statements": sorted(s.pid.value for s, _ in pairs),
        "entries": [{"path": path, "size": len(data)} for path, data in entries],
    }
    manifest_bytes = json.dumps(manifest, ensure_ascii=False, indent=2).encode("utf-8")

    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", compression=zipfile.ZIP_STORED) as archive:
        for path, data in [("manifest.json", manifest_bytes)] + entries:
            info = zipfile.ZipInfo(path, date_time=(1980, 1, 1, 0, 0, 0))
            info.external_attr = 0o644 << 16
            archive.writestr(info, data)
    return buffer.getvalue()


def _item_to_csv(item: DataItem) -> bytes:
    """RFC-4180 CSV; header row from component variable names when present."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\r\n")
    if item.components:
        writer.writerow([c.variable_name for c in item.components])
    for row in item.source.rows:
        writer.writerow(list(row))
    return out.getvalue().encode("utf-8")
